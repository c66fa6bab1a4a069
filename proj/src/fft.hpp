#pragma once

#include <complex>

namespace adisc::detail {

// Unnormalized DFTs: forward uses exp(-i k theta), backward exp(+i k theta).
// Plans are cached per length; execution is safe from multiple threads.
void fft_forward(const std::complex<double>* in, std::complex<double>* out, int n);
void fft_backward(const std::complex<double>* in, std::complex<double>* out, int n);

// Real input of length n to the n/2+1 non-negative frequencies, and back.
// fft_c2r overwrites its input.
void fft_r2c(const double* in, std::complex<double>* out, int n);
void fft_c2r(std::complex<double>* in, double* out, int n);

}  // namespace adisc::detail
