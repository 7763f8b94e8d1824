#pragma once

// Online lag convolution H_n = sum_{m=1}^{n-1} g(n - m) F_m, where F_m only
// becomes known after step m. The fast mode is the divide-and-conquer
// (relaxed) scheme: when the block of the most recent b values closes, with b
// the lowest set bit of the count, its contribution to the next b outputs is
// added by one FFT convolution against g(0 .. 2b-1). Total cost O(N log^2 N).

#include <complex>
#include <map>
#include <vector>

#include "pointnls/fft.hpp"
#include "pointnls/grid.hpp"

namespace pointnls {

class OnlineConvolution {
 public:
  OnlineConvolution(std::vector<cplx> lag_weights, bool fast, std::size_t direct_block = 32)
      : g_(std::move(lag_weights)), fast_(fast), direct_block_(direct_block) {
    f_.reserve(g_.size());
    if (fast_) acc_.assign(g_.size() + 1, cplx{});
  }

  /// Number of values pushed so far (F_1 .. F_count).
  std::size_t count() const noexcept { return f_.size(); }

  void push(cplx value) {
    f_.push_back(value);
    if (!fast_) return;
    const std::size_t done = f_.size();
    const std::size_t b = done & (~done + 1);
    const std::size_t lo = done - b;  // 0-based first index of the closing block
    if (b <= direct_block_) {
      for (std::size_t r = 0; r < b; ++r) {
        const std::size_t out = done + r;  // 0-based output index
        if (out >= acc_.size()) break;
        cplx s{};
        for (std::size_t jj = lo; jj < done; ++jj) s += lag(out - jj) * f_[jj];
        acc_[out] += s;
      }
      return;
    }
    const auto& seg = segment(b);
    std::vector<cplx> blk(4 * b);
    for (std::size_t s = 0; s < b; ++s) blk[s] = f_[lo + s];
    auto fb = fft::forward(blk);
    for (std::size_t i = 0; i < fb.size(); ++i) fb[i] *= seg[i];
    const auto conv = fft::inverse(fb);
    for (std::size_t r = 0; r < b; ++r) {
      const std::size_t out = done + r;
      if (out >= acc_.size()) break;
      acc_[out] += conv[b + r];
    }
  }

  /// H_n for n = count() + 1 or any n <= count() + 1.
  cplx history(std::size_t n) const {
    if (n < 2) return {};
    if (fast_) return acc_[n - 1];
    cplx s{};
    for (std::size_t m = 1; m < n; ++m) s += lag(n - m) * f_[m - 1];
    return s;
  }

 private:
  cplx lag(std::size_t l) const { return l < g_.size() ? g_[l] : cplx{}; }

  const std::vector<cplx>& segment(std::size_t b) {
    if (auto it = segments_.find(b); it != segments_.end()) return it->second;
    std::vector<cplx> seg(4 * b);
    for (std::size_t k = 1; k < 2 * b; ++k) seg[k] = lag(k);
    return segments_.emplace(b, fft::forward(seg)).first->second;
  }

  std::vector<cplx> g_;
  bool fast_;
  std::size_t direct_block_;
  std::vector<cplx> f_;
  std::vector<cplx> acc_;
  std::map<std::size_t, std::vector<cplx>> segments_;
};

}  // namespace pointnls
