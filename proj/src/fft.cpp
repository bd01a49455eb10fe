#include "emcomb/fft.hpp"

#include <fftw3.h>

#include <mutex>

namespace emcomb::fft {

namespace {

std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

}  // namespace

void transform(std::span<std::complex<double>> data, int sign) {
    if (data.empty()) return;
    auto* ptr = reinterpret_cast<fftw_complex*>(data.data());
    fftw_plan plan;
    {
        std::lock_guard lock(planner_mutex());
        plan = fftw_plan_dft_1d(static_cast<int>(data.size()), ptr, ptr, sign < 0 ? FFTW_FORWARD : FFTW_BACKWARD,
                                FFTW_ESTIMATE | FFTW_UNALIGNED);
    }
    fftw_execute(plan);
    {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(plan);
    }
}

std::vector<std::complex<double>> real_forward(std::span<const double> data) {
    std::vector<std::complex<double>> buf(data.begin(), data.end());
    transform(buf, -1);
    buf.resize(data.size() / 2 + 1);
    return buf;
}

}  // namespace emcomb::fft
