#pragma once

#include <fftw3.h>

#include <complex>
#include <map>
#include <mutex>
#include <vector>

#include "qstrip/grid.hpp"

namespace qstrip::detail {

/// FFTW planning is not thread-safe; execution through the new-array
/// interface is. Plans are cached per transform shape and created with
/// FFTW_ESTIMATE | FFTW_UNALIGNED so that a cached plan may execute on
/// any caller-owned buffers. Callers provide their own buffers, so
/// concurrent transforms never share scratch state.
class FftPlans {
public:
    static FftPlans& instance() {
        static FftPlans plans;
        return plans;
    }

    fftw_plan r2c(const Grid& g) { return get(g, true); }
    fftw_plan c2r(const Grid& g) { return get(g, false); }

    FftPlans(const FftPlans&) = delete;
    FftPlans& operator=(const FftPlans&) = delete;

private:
    FftPlans() = default;
    ~FftPlans() {
        for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
    }

    fftw_plan get(const Grid& g, bool forward) {
        std::scoped_lock lock(mu_);
        auto key = std::tuple{g.dim, g.n, forward};
        auto it = plans_.find(key);
        if (it != plans_.end()) return it->second;

        std::vector<int> dims(g.dim, g.n); // row-major, x contiguous (last)
        std::size_t nreal = g.size();
        std::size_t ncplx = spectral_size(g);
        std::vector<double> real_buf(nreal);
        std::vector<std::complex<double>> cplx_buf(ncplx);
        auto* cp = reinterpret_cast<fftw_complex*>(cplx_buf.data());
        unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
        fftw_plan plan = forward
            ? fftw_plan_dft_r2c(g.dim, dims.data(), real_buf.data(), cp, flags)
            : fftw_plan_dft_c2r(g.dim, dims.data(), cp, real_buf.data(), flags);
        plans_.emplace(key, plan);
        return plan;
    }

public:
    /// Number of complex coefficients in the half-spectrum (r2c layout).
    static std::size_t spectral_size(const Grid& g) {
        std::size_t s = static_cast<std::size_t>(g.n) / 2 + 1;
        for (int d = 1; d < g.dim; ++d) s *= static_cast<std::size_t>(g.n);
        return s;
    }

private:
    std::mutex mu_;
    std::map<std::tuple<int, int, bool>, fftw_plan> plans_;
};

/// Unnormalized forward transform (physical samples -> half spectrum).
inline std::vector<std::complex<double>> fft_r2c(const Grid& g,
                                                 const std::vector<double>& in) {
    std::vector<std::complex<double>> out(FftPlans::spectral_size(g));
    std::vector<double> scratch(in); // r2c may not preserve its input
    fftw_execute_dft_r2c(FftPlans::instance().r2c(g), scratch.data(),
                         reinterpret_cast<fftw_complex*>(out.data()));
    return out;
}

/// Unnormalized inverse transform (half spectrum -> physical samples).
/// Takes the spectrum by value: FFTW's c2r destroys its input.
inline std::vector<double> fft_c2r(const Grid& g,
                                   std::vector<std::complex<double>> in) {
    std::vector<double> out(g.size());
    fftw_execute_dft_c2r(FftPlans::instance().c2r(g),
                         reinterpret_cast<fftw_complex*>(in.data()), out.data());
    return out;
}

} // namespace qstrip::detail
