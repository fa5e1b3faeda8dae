#include "difffactor/detail/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <tuple>
#include <vector>

namespace difffactor::fft {
namespace {

// fftw planning is not thread-safe, execution with new arrays is.
std::mutex g_plan_mutex;

fftw_plan plan_for(int dimension, int n, int sign) {
  static std::map<std::tuple<int, int, int>, fftw_plan> cache;
  std::lock_guard lock(g_plan_mutex);
  auto key = std::make_tuple(dimension, n, sign);
  if (auto it = cache.find(key); it != cache.end()) return it->second;
  std::size_t total = dimension == 1 ? std::size_t(n) : std::size_t(n) * n;
  std::vector<std::complex<double>> scratch(total);
  auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
  unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  fftw_plan plan = dimension == 1 ? fftw_plan_dft_1d(n, buf, buf, sign, flags)
                                  : fftw_plan_dft_2d(n, n, buf, buf, sign, flags);
  cache.emplace(key, plan);
  return plan;
}

void run(std::span<std::complex<double>> data, int dimension, int n, int sign) {
  auto* buf = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(plan_for(dimension, n, sign), buf, buf);
}

}  // namespace

void forward(std::span<std::complex<double>> data, int dimension, int n) {
  run(data, dimension, n, FFTW_FORWARD);
}

void inverse(std::span<std::complex<double>> data, int dimension, int n) {
  run(data, dimension, n, FFTW_BACKWARD);
}

}  // namespace difffactor::fft
