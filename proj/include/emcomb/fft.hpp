#pragma once

#include <complex>
#include <span>
#include <vector>

namespace emcomb::fft {

/// In-place complex DFT of arbitrary length through FFTW. Plans are estimated
/// and alignment-agnostic, so results do not depend on the buffer address.
/// `sign` = -1 computes sum x_n e^{-2 pi i k n / N}, +1 the opposite kernel;
/// neither is normalized. Plan creation is serialized internally.
void transform(std::span<std::complex<double>> data, int sign);

/// Real-input convenience: returns the complex spectrum for bins 0..N/2.
[[nodiscard]] std::vector<std::complex<double>> real_forward(std::span<const double> data);

}  // namespace emcomb::fft
