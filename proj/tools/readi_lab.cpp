// SPDX-License-Identifier: Apache-2.0
// readi-lab: scenario-driven front end for the library.
//
//   readi-lab <subcommand> --scenario <file> [--seed N] [--set key=value ...] --out <dir>
//
// exit codes: 0 ok, 1 runtime failure, 2 usage or config error

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "readi/lab/acceptance.hpp"
#include "readi/scenario.hpp"

namespace fs = std::filesystem;
using namespace readi;

namespace {

constexpr const char* kOutEnv = "READI_LAB_OUT";

struct Options {
  std::string subcommand;
  std::string scenario;
  std::string out;
  std::string input;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> sets;
  std::string only;  // demo: criteria subset
};

struct usage_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Context {
  Options opt;
  Scenario sc;
  json resolved;
  fs::path out;
  MetricsTable metrics;

  fs::path file(const std::string& name) const { return out / name; }
};

fs::path output_dir(const Options& o) {
  if (!o.out.empty()) return o.out;
  if (const char* env = std::getenv(kOutEnv); env && *env) return env;
  throw usage_error("no output directory: pass --out or set " + std::string(kOutEnv));
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw config_error("--out", "cannot create output directory " + dir.string());
  const fs::path probe = dir / ".readi-lab-write-test";
  {
    std::ofstream t(probe);
    if (!t) throw config_error("--out", "output directory " + dir.string() + " is not writable");
  }
  fs::remove(probe, ec);
}

void write_text(const fs::path& path, const std::string& text) {
  write_bytes(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

Context prepare(const Options& o) {
  Context c;
  c.opt = o;
  if (o.scenario.empty()) throw usage_error("--scenario is required for '" + o.subcommand + "'");
  if (!fs::exists(o.scenario)) throw config_error("--scenario", "scenario file not found: " + o.scenario);
  json doc = load_json(o.scenario);
  if (!doc.is_object()) throw config_error(o.scenario, "top level must be a JSON object");
  doc.erase("provenance");
  for (const auto& s : o.sets) apply_override(doc, s);
  if (o.seed) doc["seed"] = *o.seed;
  c.sc = parse_scenario(doc);
  validate(c.sc);
  c.out = output_dir(o);
  ensure_dir(c.out);

  c.resolved = to_json(c.sc);
  json prov;
  prov["subcommand"] = o.subcommand;
  prov["scenario_file"] = o.scenario;
  prov["overrides"] = o.sets;
  prov["seed_flag"] = o.seed ? json(*o.seed) : json(nullptr);
  prov["input"] = o.input.empty() ? json(nullptr) : json(o.input);
  c.resolved["provenance"] = prov;
  write_text(c.file("resolved_config.json"), c.resolved.dump(2) + "\n");
  return c;
}

// ---------------------------------------------------------------------------
// data

template <class T>
EncodedDataset<T> slice_events(const EncodedDataset<T>& g, std::size_t first, std::size_t count) {
  auto out = like<T, encoded_tag>(g, count);
  const std::size_t block = g.n_rx() * g.n_samples();
  const auto begin = g.samples().begin() + static_cast<std::ptrdiff_t>(first * block);
  std::copy(begin, begin + static_cast<std::ptrdiff_t>(count * block), out.samples().begin());
  return out;
}

// All acquisitions back to back; acquisition a covers events a*N+1 .. (a+1)*N.
EncodedDataset<double> simulate_all(const Scenario& sc) {
  auto scene = build_scene(sc);
  const int n = sc.geometry.n_elements;
  const long last = sc.first_event + static_cast<long>(sc.acquisitions) * n - 1;
  const auto win = auto_window(scene, sc.geometry, sc.pulse, sc.first_event, last);
  const auto h = sylvester(n);
  std::optional<EncodedDataset<double>> all;
  for (int a = 0; a < sc.acquisitions; ++a) {
    scene.rng_seed = sc.seed + static_cast<std::uint64_t>(a);
    auto g = simulate_forces(scene, sc.geometry, sc.pulse, h, win, sc.first_event + static_cast<long>(a) * n, sc.beamform.threads);
    if (!all) {
      all.emplace(static_cast<std::size_t>(n) * sc.acquisitions, g.n_rx(), g.n_samples(), g.sample_rate(), g.start_time());
    }
    std::copy(g.samples().begin(), g.samples().end(),
              all->samples().begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(a) * g.samples().size()));
  }
  return std::move(*all);
}

template <class T>
EncodedDataset<T> acquire(const Context& c) {
  const auto n = static_cast<std::size_t>(c.sc.geometry.n_elements);
  if (c.opt.input.empty()) return cast<T>(simulate_all(c.sc));
  const auto box = read_container(c.opt.input);
  if (box.layout != DataLayout::encoded) throw error(errc::dimension_mismatch, "--input: container layout is not an encoded FORCES set");
  if (box.n_rx != n)
    throw error(errc::dimension_mismatch, "geometry.n_elements is " + std::to_string(n) + " but the container has " +
                                              std::to_string(box.n_rx) + " receive channels");
  if (box.n_tx != n * static_cast<std::size_t>(c.sc.acquisitions))
    throw error(errc::dimension_mismatch, "acquisition.acquisitions x geometry.n_elements is " +
                                              std::to_string(n * static_cast<std::size_t>(c.sc.acquisitions)) +
                                              " events but the container has " + std::to_string(box.n_tx));
  if (box.dtype == DType::f64) return cast<T>(from_container<double, encoded_tag>(box));
  if (box.dtype == DType::f32) return cast<T>(from_container<float, encoded_tag>(box));
  throw error(errc::dtype_mismatch, "--input: expected real f32 or f64 samples");
}

// ---------------------------------------------------------------------------
// images and metrics

template <class T>
void emit_image(Context& c, const std::string& name, const ComplexImage<T>& img) {
  if (!c.sc.outputs.images) return;
  write_pgm(c.file(name + ".pgm"), envelope_log(img, c.sc.outputs.dynamic_range_db));
  std::cout << "wrote " << c.file(name + ".pgm").string() << "\n";
}

template <class T>
void image_metrics(Context& c, const std::string& prefix, const ComplexImage<T>& img) {
  const auto w = psf_width(img, Axis::lateral);
  c.metrics.add(prefix + "_psf_width_mm", c.sc.name, w.width * 1e3);
  c.metrics.add(prefix + "_psf_grid_limited", c.sc.name, w.grid_limited ? 1.0 : 0.0);
  if (c.sc.roi_inside && c.sc.roi_background)
    c.metrics.add(prefix + "_gcnr", c.sc.name, gcnr(img, *c.sc.roi_inside, *c.sc.roi_background));
}

void finish_metrics(Context& c) {
  if (c.metrics.empty()) return;
  c.metrics.write(c.file("metrics.csv"));
  std::cout << "wrote " << c.file("metrics.csv").string() << "\n";
}

template <class T>
std::vector<ComplexImage<T>> low_res_images(const Context& c, const EncodedDataset<T>& acq) {
  return readi_reconstruct(acq, c.sc.grouping(), c.sc.grid.grid(), c.sc.geometry, c.sc.beamform);
}

// ---------------------------------------------------------------------------
// subcommands

template <class T>
void run_simulate(Context& c) {
  const auto g = simulate_all(c.sc);
  const auto box = to_container(cast<T>(g));
  write_container(c.file("acquisition.readi"), box);
  std::cout << "wrote " << c.file("acquisition.readi").string() << " (" << g.n_tx() << " events x " << g.n_rx() << " channels x "
            << g.n_samples() << " samples, " << to_string(box.dtype) << ")\n";
}

template <class T>
void run_beamform(Context& c) {
  const auto g = acquire<T>(c);
  const auto n = static_cast<std::size_t>(c.sc.geometry.n_elements);
  const auto img = forces_reconstruct(slice_events(g, 0, n), sylvester(c.sc.geometry.n_elements), c.sc.grid.grid(), c.sc.geometry,
                                      c.sc.beamform);
  emit_image(c, "forces", img);
  image_metrics(c, "forces", img);
  finish_metrics(c);
}

template <class T>
void run_readi(Context& c) {
  const auto g = acquire<T>(c);
  const auto low = low_res_images(c, slice_events(g, 0, static_cast<std::size_t>(c.sc.geometry.n_elements)));
  for (const auto& img : low) emit_image(c, "readi_s" + std::to_string(img.group), img);
  const auto comp = compound(low);
  emit_image(c, "readi_compound", comp);
  image_metrics(c, "readi_compound", comp);
  finish_metrics(c);
}

template <class T>
void run_emc2(Context& c) {
  const auto g = acquire<T>(c);
  const auto low = low_res_images(c, slice_events(g, 0, static_cast<std::size_t>(c.sc.geometry.n_elements)));
  if (c.sc.motion.reference_index >= static_cast<int>(low.size()))
    throw config_error("motion.reference_index", "exceeds the number of low-res images");
  const auto res = emc2_compensate(low, c.sc.motion);
  emit_image(c, "emc2", res.image);
  image_metrics(c, "emc2", res.image);
  std::size_t valid = 0, total = 0;
  for (std::size_t s = 0; s < res.fields.size(); ++s) {
    const auto& f = res.fields[s];
    if (f.size() == 0) continue;
    valid += f.valid_count();
    total += f.size();
    if (c.sc.outputs.motion_csv) {
      std::ostringstream os;
      write_motion_csv(os, f);
      const auto path = c.file("motion_s" + std::to_string(s + 1) + ".csv");
      write_text(path, os.str());
      std::cout << "wrote " << path.string() << "\n";
    }
  }
  c.metrics.add("emc2_valid_fraction", c.sc.name, total ? static_cast<double>(valid) / static_cast<double>(total) : 0.0);
  finish_metrics(c);
}

template <class T>
ComplexImage<T> rms_image(const ImageEnsemble<T>& e) {
  ComplexImage<T> out(e.frames.front().grid, ImageKind::compound);
  for (const auto& f : e.frames) out.pixels.real() += f.pixels.cwiseAbs2();
  out.pixels = (out.pixels.real() / static_cast<T>(e.frames.size())).cwiseSqrt().template cast<std::complex<T>>();
  return out;
}

template <class T>
void run_filter(Context& c) {
  const auto g = acquire<T>(c);
  const auto n = static_cast<std::size_t>(c.sc.geometry.n_elements);
  ImageEnsemble<T> ens;
  ens.frame_interval = c.sc.grouping().group_size / c.sc.scene.prf;
  for (int a = 0; a < c.sc.acquisitions; ++a)
    for (auto& img : low_res_images(c, slice_events(g, static_cast<std::size_t>(a) * n, n))) ens.frames.push_back(std::move(img));
  if (ens.frames.size() < 2) throw config_error("grouping.S", "the filter needs at least 2 low-res frames (S x acquisitions)");
  const auto keep = parse_keep_set(c.sc.keep);
  const auto rank = static_cast<int>(std::min<std::size_t>(ens.frames.size(), static_cast<std::size_t>(ens.frames.front().pixels.size())));
  for (int k : keep)
    if (k < 1 || k > rank)
      throw config_error("filter.keep", "index " + std::to_string(k) + " outside 1.." + std::to_string(rank) + " (frames available)");
  const auto filtered = svd_filter(ens, keep);
  emit_image(c, "ensemble_rms", rms_image(ens));
  emit_image(c, "filtered_rms", rms_image(filtered));
  c.metrics.add("filter_frames", c.sc.name, static_cast<double>(ens.frames.size()));
  c.metrics.add("filter_energy_fraction", c.sc.name, energy(filtered) / energy(ens));
  finish_metrics(c);
}

template <class T>
void run_metrics(Context& c) {
  const auto g = acquire<T>(c);
  const auto n = static_cast<std::size_t>(c.sc.geometry.n_elements);
  const auto acq = slice_events(g, 0, n);
  const auto forces = forces_reconstruct(acq, sylvester(c.sc.geometry.n_elements), c.sc.grid.grid(), c.sc.geometry, c.sc.beamform);
  image_metrics(c, "forces", forces);
  const auto low = low_res_images(c, acq);
  const auto comp = compound(low);
  image_metrics(c, "readi_compound", comp);
  c.metrics.add("readi_forces_rel_l2", c.sc.name, relative_l2(comp, forces));
  if (low.size() > 1) image_metrics(c, "emc2", emc2_compensate(low, c.sc.motion).image);
  finish_metrics(c);
}

int run_demo(const Options& o) {
  std::vector<int> only;
  if (!o.only.empty()) {
    try {
      only = parse_keep_set(o.only);
    } catch (const error& e) {
      throw usage_error(std::string("--only: ") + e.what());
    }
  }
  std::optional<fs::path> out;
  if (!o.out.empty() || std::getenv(kOutEnv)) {
    out = output_dir(o);
    ensure_dir(*out);
  }
  std::cout << "readi-lab acceptance demo\n";
  MetricsTable table;
  const auto results = lab::run_acceptance(only, [&](const lab::CheckResult& r) {
    std::cout << lab::summary_line(r) << std::endl;
    table.add("criterion_" + std::to_string(r.criterion) + "_pass", "demo", r.pass ? 1.0 : 0.0);
    if (out)
      for (const auto& [name, img] : r.images) write_pgm(*out / (name + ".pgm"), img);
  });
  int failed = 0;
  for (const auto& r : results) failed += r.pass ? 0 : 1;
  std::cout << (results.size() - static_cast<std::size_t>(failed)) << "/" << results.size() << " criteria passed\n";
  if (out) {
    table.write(*out / "acceptance.csv");
    std::cout << "wrote " << (*out / "acceptance.csv").string() << "\n";
  }
  return failed ? 1 : 0;
}

template <class T>
void dispatch(Context& c) {
  const auto& s = c.opt.subcommand;
  if (s == "simulate") run_simulate<T>(c);
  else if (s == "beamform") run_beamform<T>(c);
  else if (s == "readi") run_readi<T>(c);
  else if (s == "emc2") run_emc2<T>(c);
  else if (s == "filter") run_filter<T>(c);
  else if (s == "metrics") run_metrics<T>(c);
}

int run(const Options& o) {
  if (o.subcommand == "demo") return run_demo(o);
  Context c = prepare(o);
  if (c.sc.precision == Precision::f64) dispatch<double>(c);
  else dispatch<float>(c);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hadamard-encoded synthetic aperture lab: simulate, beamform, READI, EMC2, filter, metrics"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");
  Options opt;

  const std::pair<const char*, const char*> subs[] = {
      {"simulate", "Simulate FORCES acquisitions and write acquisition.readi"},
      {"beamform", "Decode and beamform the FORCES image"},
      {"readi", "READI low-res images and their compound"},
      {"emc2", "Motion-compensated READI compounding"},
      {"filter", "SVD clutter filter over READI low-res ensembles"},
      {"metrics", "PSF width and gCNR for FORCES, READI and EMC2 images"},
      {"demo", "Run the acceptance experiments and print a pass/fail table"},
  };
  for (const auto& [name, help] : subs) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--scenario", opt.scenario, "Scenario JSON file");
    sub->add_option("--seed", opt.seed, "Override the scenario seed");
    sub->add_option("--set", opt.sets, "Override a scenario key, e.g. --set grouping.S=4 (repeatable)")->take_all();
    sub->add_option("--out", opt.out, std::string("Output directory (default: $") + kOutEnv + ")");
    if (std::string(name) == "demo") {
      sub->add_option("--only", opt.only, "Criteria subset, e.g. 1,3-5");
    } else {
      sub->add_option("--input", opt.input, "Read channel data from a container instead of simulating");
    }
    sub->callback([&opt, n = std::string(name)] { opt.subcommand = n; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    return run(opt);
  } catch (const usage_error& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const config_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const readi::error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
