#pragma once

#include <complex>
#include <span>

namespace cfo::detail {

// Unitary DFT (1/sqrt(n) scaling) backed by FFTW. Plans are created once per
// (size, direction) and executed with the new-array interface, which is safe
// to call from several threads at once.
void dft_forward(std::span<const std::complex<double>> in, std::span<std::complex<double>> out);
void dft_inverse(std::span<const std::complex<double>> in, std::span<std::complex<double>> out);

}  // namespace cfo::detail
