// SPDX-License-Identifier: Apache-2.0
#pragma once

// Exact integer Hadamard algebra. Matrix storage is 0-based; the index maps
// (index_split, kron_entry, entry) use the 1-based convention of the
// reconstruction formulas.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "readi/error.hpp"

namespace readi {

constexpr int max_hadamard_rank = 1024;

constexpr bool is_power_of_two(long n) { return n >= 1 && (n & (n - 1)) == 0; }

class HadamardMatrix {
 public:
  HadamardMatrix() = default;

  int rank() const noexcept { return n_; }

  // 0-based access.
  int operator()(int row, int col) const { return entries_[static_cast<std::size_t>(row) * n_ + col]; }

  // 1-based access, h_{row,col}.
  int entry(int row, int col) const { return (*this)(row - 1, col - 1); }

  const std::vector<std::int8_t>& entries() const noexcept { return entries_; }

  HadamardMatrix transpose() const {
    HadamardMatrix t;
    t.n_ = n_;
    t.entries_.resize(entries_.size());
    for (int r = 0; r < n_; ++r)
      for (int c = 0; c < n_; ++c) t.entries_[static_cast<std::size_t>(c) * n_ + r] = entries_[static_cast<std::size_t>(r) * n_ + c];
    return t;
  }

  bool operator==(const HadamardMatrix&) const = default;

  friend HadamardMatrix sylvester(int n);
  friend HadamardMatrix kronecker(const HadamardMatrix& a, const HadamardMatrix& b);

 private:
  int n_ = 0;
  std::vector<std::int8_t> entries_;
};

inline HadamardMatrix kronecker(const HadamardMatrix& a, const HadamardMatrix& b) {
  HadamardMatrix k;
  k.n_ = a.n_ * b.n_;
  k.entries_.resize(static_cast<std::size_t>(k.n_) * k.n_);
  for (int ar = 0; ar < a.n_; ++ar)
    for (int ac = 0; ac < a.n_; ++ac)
      for (int br = 0; br < b.n_; ++br)
        for (int bc = 0; bc < b.n_; ++bc)
          k.entries_[static_cast<std::size_t>(ar * b.n_ + br) * k.n_ + (ac * b.n_ + bc)] =
              static_cast<std::int8_t>(a(ar, ac) * b(br, bc));
  return k;
}

// H_1 = [1], H_2n = H_2 (x) H_n.
inline HadamardMatrix sylvester(int n) {
  if (!is_power_of_two(n) || n > max_hadamard_rank)
    throw error(errc::invalid_rank, "Hadamard rank must be a power of two in [1, 1024], got " + std::to_string(n));
  HadamardMatrix h;
  h.n_ = 1;
  h.entries_ = {1};
  HadamardMatrix h2;
  h2.n_ = 2;
  h2.entries_ = {1, 1, 1, -1};
  while (h.n_ < n) h = kronecker(h2, h);
  return h;
}

// Inverse as (scale, matrix) with scale * matrix * H = I; scale = 1/n.
struct ScaledInverse {
  int denominator = 1;
  HadamardMatrix matrix;

  double scale() const noexcept { return 1.0 / denominator; }
};

inline ScaledInverse inverse_scale(const HadamardMatrix& h) { return {h.rank(), h.transpose()}; }

// Integer product a * b.
inline std::vector<long> integer_product(const HadamardMatrix& a, const HadamardMatrix& b) {
  if (a.rank() != b.rank()) throw error(errc::dimension_mismatch, "rank mismatch in integer_product");
  const int n = a.rank();
  std::vector<long> out(static_cast<std::size_t>(n) * n, 0);
  for (int r = 0; r < n; ++r)
    for (int k = 0; k < n; ++k) {
      const long ark = a(r, k);
      for (int c = 0; c < n; ++c) out[static_cast<std::size_t>(r) * n + c] += ark * b(k, c);
    }
  return out;
}

struct GroupingScheme {
  int n_total = 1;
  int n_groups = 1;
  int group_size = 1;

  static GroupingScheme make(int n_total, int n_groups) {
    if (n_groups < 1 || n_total < 1 || n_total % n_groups != 0)
      throw error(errc::dimension_mismatch,
                  "cannot split " + std::to_string(n_total) + " events into " + std::to_string(n_groups) + " groups");
    GroupingScheme g{n_total, n_groups, n_total / n_groups};
    g.validate();
    return g;
  }

  void validate() const {
    if (n_total != n_groups * group_size)
      throw error(errc::dimension_mismatch, "N must equal S*Q (N=" + std::to_string(n_total) + ", S=" +
                                                std::to_string(n_groups) + ", Q=" + std::to_string(group_size) + ")");
    if (!is_power_of_two(n_total) || !is_power_of_two(n_groups) || !is_power_of_two(group_size))
      throw error(errc::invalid_rank, "N, S and Q must all be powers of two");
  }

  bool operator==(const GroupingScheme&) const = default;
};

struct GroupIndex {
  int group = 1;   // l (elements) or s (events)
  int within = 1;  // v (elements) or q (events)

  bool operator==(const GroupIndex&) const = default;
};

// flat = within + Q (group - 1), all 1-based.
constexpr GroupIndex index_split(int flat, int group_size) {
  return {(flat - 1) / group_size + 1, (flat - 1) % group_size + 1};
}

constexpr int index_join(GroupIndex g, int group_size) { return g.within + group_size * (g.group - 1); }

// h^(N)_{i,e} = h^(S)_{s,l} h^(Q)_{q,v}, with (l,v) from i and (s,q) from e.
inline int kron_entry(const HadamardMatrix& hs, const HadamardMatrix& hq, int element, int event) {
  const auto [l, v] = index_split(element, hq.rank());
  const auto [s, q] = index_split(event, hq.rank());
  return hs.entry(s, l) * hq.entry(q, v);
}

inline int kron_entry(int s_rank, int q_rank, int element, int event) {
  return kron_entry(sylvester(s_rank), sylvester(q_rank), element, event);
}

}  // namespace readi
