#pragma once

#include <complex>
#include <cstddef>
#include <mutex>

#include <fftw3.h>

#include "fkpp/error.hpp"

namespace fkpp {

// FFTW planning is not thread-safe; execution on a planned transform is.
inline std::mutex& fftw_planner_mutex() {
    static std::mutex mu;
    return mu;
}

// Real-to-complex transform pair of length n with owned, aligned buffers.
class RealFFT {
public:
    explicit RealFFT(std::size_t n) : n_(n) {
        real_ = fftw_alloc_real(n_);
        spec_ = fftw_alloc_complex(n_ / 2 + 1);
        if (!real_ || !spec_) throw Error("FFT buffer allocation failed");
        std::lock_guard<std::mutex> lock(fftw_planner_mutex());
        fwd_ = fftw_plan_dft_r2c_1d(static_cast<int>(n_), real_, spec_, FFTW_ESTIMATE);
        bwd_ = fftw_plan_dft_c2r_1d(static_cast<int>(n_), spec_, real_, FFTW_ESTIMATE);
    }
    RealFFT(const RealFFT&) = delete;
    RealFFT& operator=(const RealFFT&) = delete;
    ~RealFFT() {
        std::lock_guard<std::mutex> lock(fftw_planner_mutex());
        fftw_destroy_plan(fwd_);
        fftw_destroy_plan(bwd_);
        fftw_free(real_);
        fftw_free(spec_);
    }

    std::size_t size() const { return n_; }
    std::size_t spectrum_size() const { return n_ / 2 + 1; }
    double* real() { return real_; }
    std::complex<double>* spectrum() { return reinterpret_cast<std::complex<double>*>(spec_); }

    void forward() { fftw_execute(fwd_); }
    // Unnormalized: forward then backward multiplies by n.
    void backward() { fftw_execute(bwd_); }

private:
    std::size_t n_;
    double* real_ = nullptr;
    fftw_complex* spec_ = nullptr;
    fftw_plan fwd_ = nullptr;
    fftw_plan bwd_ = nullptr;
};

}  // namespace fkpp
