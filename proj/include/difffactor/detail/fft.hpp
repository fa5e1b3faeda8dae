#pragma once

#include <complex>
#include <span>

namespace difffactor::fft {

// Unnormalized in-place transforms on an n (1D) or n x n row-major (2D) array.
// forward computes sum_j a_j exp(-2 pi i k j / n); inverse uses the + sign.
void forward(std::span<std::complex<double>> data, int dimension, int n);
void inverse(std::span<std::complex<double>> data, int dimension, int n);

}  // namespace difffactor::fft
