#pragma once

// Thin FFTW wrapper. Plans are created once per (size, direction) under a
// lock and then executed through the new-array interface, which is
// thread-safe.

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <map>
#include <mutex>
#include <span>
#include <utility>
#include <vector>

namespace pointnls::fft {

namespace detail {

class PlanCache {
 public:
  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  fftw_plan get(std::size_t n, int sign) {
    std::lock_guard lock(mutex_);
    auto key = std::make_pair(n, sign);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    auto* in = fftw_alloc_complex(n);
    auto* out = fftw_alloc_complex(n);
    fftw_plan plan = fftw_plan_dft_1d(static_cast<int>(n), in, out, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(in);
    fftw_free(out);
    plans_.emplace(key, plan);
    return plan;
  }

  PlanCache(const PlanCache&) = delete;
  PlanCache& operator=(const PlanCache&) = delete;

 private:
  PlanCache() = default;
  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  std::mutex mutex_;
  std::map<std::pair<std::size_t, int>, fftw_plan> plans_;
};

inline void execute(std::span<const std::complex<double>> in, std::span<std::complex<double>> out, int sign) {
  fftw_plan plan = PlanCache::instance().get(in.size(), sign);
  // FFTW never writes to the input of an out-of-place complex transform.
  auto* src = reinterpret_cast<fftw_complex*>(const_cast<std::complex<double>*>(in.data()));
  auto* dst = reinterpret_cast<fftw_complex*>(out.data());
  fftw_execute_dft(plan, src, dst);
}

}  // namespace detail

/// Unnormalized DFT: out_m = sum_j in_j exp(-2 pi i m j / n).
inline std::vector<std::complex<double>> forward(std::span<const std::complex<double>> in) {
  std::vector<std::complex<double>> out(in.size());
  detail::execute(in, out, FFTW_FORWARD);
  return out;
}

/// Normalized inverse of forward().
inline std::vector<std::complex<double>> inverse(std::span<const std::complex<double>> in) {
  std::vector<std::complex<double>> out(in.size());
  detail::execute(in, out, FFTW_BACKWARD);
  const double scale = 1.0 / static_cast<double>(in.size());
  for (auto& v : out) v *= scale;
  return out;
}

/// Acyclic convolution of two complex sequences via zero-padded FFTs.
inline std::vector<std::complex<double>> convolve(std::span<const std::complex<double>> a,
                                                  std::span<const std::complex<double>> b) {
  if (a.empty() || b.empty()) return {};
  const std::size_t need = a.size() + b.size() - 1;
  std::size_t n = 1;
  while (n < need) n <<= 1;
  std::vector<std::complex<double>> pa(n), pb(n);
  std::copy(a.begin(), a.end(), pa.begin());
  std::copy(b.begin(), b.end(), pb.begin());
  auto fa = forward(pa);
  auto fb = forward(pb);
  for (std::size_t i = 0; i < n; ++i) fa[i] *= fb[i];
  auto c = inverse(fa);
  c.resize(need);
  return c;
}

}  // namespace pointnls::fft
