#pragma once

#include <cmath>
#include <complex>
#include <vector>

#include "qstrip/fft.hpp"
#include "qstrip/field.hpp"

namespace qstrip {

/// Half-spectrum Fourier coefficients of a real field (r2c layout,
/// x-wavenumber axis truncated to [0, n/2]). Coefficients are normalized:
/// f(x) = sum_k c_k exp(i k.x) with integer wavenumbers.
using Spectrum = std::vector<std::complex<double>>;

inline Spectrum to_spectral(const ScalarField& f) {
    Spectrum s = detail::fft_r2c(f.grid(), f.values());
    double inv = 1.0 / static_cast<double>(f.grid().size());
    for (auto& c : s) c *= inv;
    return s;
}

inline ScalarField to_physical(const Grid& g, Spectrum s) {
    return ScalarField(g, detail::fft_c2r(g, std::move(s)));
}

namespace detail {

/// Visit every half-spectrum mode: fn(flat_index, kx, ky, kz) with signed
/// integer wavenumbers (kz = 0 in 2D). kx runs over [0, n/2].
template <class Fn>
inline void for_each_mode(const Grid& g, Fn&& fn) {
    const int n = g.n;
    const int nx = n / 2 + 1;
    auto signed_k = [n](int j) { return j <= n / 2 ? j : j - n; };
    if (g.dim == 2) {
        std::size_t idx = 0;
        for (int jy = 0; jy < n; ++jy) {
            int ky = signed_k(jy);
            for (int kx = 0; kx < nx; ++kx, ++idx) fn(idx, kx, ky, 0);
        }
    } else {
        std::size_t idx = 0;
        for (int jz = 0; jz < n; ++jz) {
            int kz = signed_k(jz);
            for (int jy = 0; jy < n; ++jy) {
                int ky = signed_k(jy);
                for (int kx = 0; kx < nx; ++kx, ++idx) fn(idx, kx, ky, kz);
            }
        }
    }
}

/// Multiplier for first derivatives: Nyquist modes are dropped (their
/// derivative is not representable in the real half-spectrum).
inline double deriv_k(int k, int n) {
    return std::abs(k) == n / 2 ? 0.0 : static_cast<double>(k);
}

} // namespace detail

/// Spectral gradient; exact for band-limited fields.
inline VectorField gradient(const ScalarField& f) {
    const Grid& g = f.grid();
    Spectrum s = to_spectral(f);
    std::vector<Spectrum> ds(g.dim, Spectrum(s.size()));
    detail::for_each_mode(g, [&](std::size_t idx, int kx, int ky, int kz) {
        std::complex<double> ic = {-s[idx].imag(), s[idx].real()}; // i * c
        ds[0][idx] = detail::deriv_k(kx, g.n) * ic;
        ds[1][idx] = detail::deriv_k(ky, g.n) * ic;
        if (g.dim == 3) ds[2][idx] = detail::deriv_k(kz, g.n) * ic;
    });
    std::vector<ScalarField> comps;
    comps.reserve(g.dim);
    for (int d = 0; d < g.dim; ++d) comps.push_back(to_physical(g, std::move(ds[d])));
    return VectorField(g, std::move(comps));
}

/// Spectral divergence.
inline ScalarField divergence(const VectorField& u) {
    const Grid& g = u.grid();
    std::vector<Spectrum> s;
    s.reserve(g.dim);
    for (int d = 0; d < g.dim; ++d) s.push_back(to_spectral(u.comp(d)));
    Spectrum out(s[0].size());
    detail::for_each_mode(g, [&](std::size_t idx, int kx, int ky, int kz) {
        std::complex<double> acc =
            detail::deriv_k(kx, g.n) * s[0][idx] + detail::deriv_k(ky, g.n) * s[1][idx];
        if (g.dim == 3) acc += detail::deriv_k(kz, g.n) * s[2][idx];
        out[idx] = {-acc.imag(), acc.real()}; // i * acc
    });
    return to_physical(g, std::move(out));
}

/// Spectral Laplacian (all modes, including Nyquist).
inline ScalarField laplacian(const ScalarField& f) {
    const Grid& g = f.grid();
    Spectrum s = to_spectral(f);
    detail::for_each_mode(g, [&](std::size_t idx, int kx, int ky, int kz) {
        double k2 = static_cast<double>(kx) * kx + static_cast<double>(ky) * ky +
                    static_cast<double>(kz) * kz;
        s[idx] *= -k2;
    });
    return to_physical(g, std::move(s));
}

/// Zero-mean solution of laplacian(f) = rhs. The zero mode of the result
/// is set to zero, which fixes the additive gauge (zero-mean fields).
inline ScalarField solve_poisson(const ScalarField& rhs) {
    double m = rhs.mean();
    double scale = rhs.max_abs();
    if (std::abs(m) > 1e-10 * scale)
        throw NonZeroMeanRHS("solve_poisson: rhs mean " + std::to_string(m) +
                             " exceeds 1e-10 of max-norm " + std::to_string(scale));
    const Grid& g = rhs.grid();
    Spectrum s = to_spectral(rhs);
    detail::for_each_mode(g, [&](std::size_t idx, int kx, int ky, int kz) {
        double k2 = static_cast<double>(kx) * kx + static_cast<double>(ky) * ky +
                    static_cast<double>(kz) * kz;
        s[idx] = k2 == 0.0 ? std::complex<double>{0.0, 0.0} : s[idx] / (-k2);
    });
    return to_physical(g, std::move(s));
}

/// Wavenumber cutoff for the 2/3 dealiasing rule.
inline int dealias_cutoff(const Grid& g) { return g.n / 3; }

/// Zero every mode with any wavenumber component above the 2/3 cutoff.
inline ScalarField dealias(const ScalarField& f) {
    const Grid& g = f.grid();
    const int cut = dealias_cutoff(g);
    Spectrum s = to_spectral(f);
    detail::for_each_mode(g, [&](std::size_t idx, int kx, int ky, int kz) {
        if (std::abs(kx) > cut || std::abs(ky) > cut || std::abs(kz) > cut)
            s[idx] = {0.0, 0.0};
    });
    return to_physical(g, std::move(s));
}

inline VectorField dealias(const VectorField& u) {
    std::vector<ScalarField> comps;
    comps.reserve(u.dim());
    for (int d = 0; d < u.dim(); ++d) comps.push_back(dealias(u.comp(d)));
    return VectorField(u.grid(), std::move(comps), u.divergence_free());
}

/// Leray projection onto divergence-free fields:
/// P u = u - grad(laplacian^-1(div u)). Idempotent; flags the result.
inline VectorField leray_project(const VectorField& u) {
    ScalarField div_u = divergence(u);
    VectorField grad_phi = gradient(solve_poisson(div_u));
    VectorField r = u - grad_phi;
    r.set_divergence_free(true);
    return r;
}

/// Pointwise squared vorticity magnitude:
/// 0.5 * sum_{j,k} (d_j v_k - d_k v_j)^2. In 2D this is the squared scalar
/// curl; in 3D the squared magnitude of curl v.
inline ScalarField vorticity_norm_sq(const VectorField& u) {
    const Grid& g = u.grid();
    std::vector<VectorField> d; // d[k] = grad(u_k)
    d.reserve(g.dim);
    for (int k = 0; k < g.dim; ++k) d.push_back(gradient(u.comp(k)));
    ScalarField r(g);
    if (g.dim == 2) {
        for (std::size_t i = 0; i < r.size(); ++i) {
            double w = d[1].comp(0)[i] - d[0].comp(1)[i]; // d1 v2 - d2 v1
            r[i] = w * w;
        }
    } else {
        for (std::size_t i = 0; i < r.size(); ++i) {
            double w1 = d[2].comp(1)[i] - d[1].comp(2)[i];
            double w2 = d[0].comp(2)[i] - d[2].comp(0)[i];
            double w3 = d[1].comp(0)[i] - d[0].comp(1)[i];
            r[i] = w1 * w1 + w2 * w2 + w3 * w3;
        }
    }
    return r;
}

// ---- resolution diagnostics --------------------------------------------

/// Fraction of spectral energy above half the dealias cutoff, plus the
/// cutoff itself. A field is well resolved when the high-mode fraction is
/// below 1e-8: products of three such fields are then alias-free on the
/// grid, which is what every diagnostic identity here relies on. Time
/// stepping tolerates a larger tail (any nonlinear evolution feeds the
/// band below the cutoff) up to the stepping threshold, beyond which the
/// trajectory is genuinely under-resolved.
struct SpectralDiagnostics {
    double high_mode_energy_fraction = 0.0;
    int dealias_cutoff = 0;
    bool well_resolved = true;

    static constexpr double resolved_threshold = 1e-8;
    static constexpr double stepping_threshold = 1e-3;
};

namespace detail {

/// Hermitian weight: interior x-modes represent two conjugate modes.
inline double mode_weight(int kx, int n) { return (kx == 0 || kx == n / 2) ? 1.0 : 2.0; }

} // namespace detail

inline SpectralDiagnostics diagnose(const ScalarField& f) {
    const Grid& g = f.grid();
    SpectralDiagnostics diag;
    diag.dealias_cutoff = dealias_cutoff(g);
    const double khalf = diag.dealias_cutoff / 2.0;
    Spectrum s = to_spectral(f);
    double total = 0.0, high = 0.0;
    detail::for_each_mode(g, [&](std::size_t idx, int kx, int ky, int kz) {
        double e = detail::mode_weight(kx, g.n) * std::norm(s[idx]);
        total += e;
        int kmax = std::max({std::abs(kx), std::abs(ky), std::abs(kz)});
        if (kmax > khalf) high += e;
    });
    diag.high_mode_energy_fraction = total > 0.0 ? high / total : 0.0;
    diag.well_resolved =
        diag.high_mode_energy_fraction < SpectralDiagnostics::resolved_threshold;
    return diag;
}

inline SpectralDiagnostics diagnose(const VectorField& u) {
    const Grid& g = u.grid();
    SpectralDiagnostics diag;
    diag.dealias_cutoff = dealias_cutoff(g);
    const double khalf = diag.dealias_cutoff / 2.0;
    double total = 0.0, high = 0.0;
    for (int d = 0; d < g.dim; ++d) {
        Spectrum s = to_spectral(u.comp(d));
        detail::for_each_mode(g, [&](std::size_t idx, int kx, int ky, int kz) {
            double e = detail::mode_weight(kx, g.n) * std::norm(s[idx]);
            total += e;
            int kmax = std::max({std::abs(kx), std::abs(ky), std::abs(kz)});
            if (kmax > khalf) high += e;
        });
    }
    diag.high_mode_energy_fraction = total > 0.0 ? high / total : 0.0;
    diag.well_resolved =
        diag.high_mode_energy_fraction < SpectralDiagnostics::resolved_threshold;
    return diag;
}

/// sum of squared samples times cell volume.
inline double physical_energy(const ScalarField& f) {
    double s = 0.0;
    for (double x : f.values()) s += x * x;
    return s * f.grid().cell_volume();
}

/// (2pi)^dim times the sum of squared coefficient magnitudes; equals
/// physical_energy by Parseval.
inline double spectral_energy(const ScalarField& f) {
    const Grid& g = f.grid();
    Spectrum s = to_spectral(f);
    double acc = 0.0;
    detail::for_each_mode(g, [&](std::size_t idx, int kx, int, int) {
        acc += detail::mode_weight(kx, g.n) * std::norm(s[idx]);
    });
    return acc * std::pow(two_pi, g.dim);
}

/// Kinetic energy 0.5 * integral of |v|^2.
inline double kinetic_energy(const VectorField& u) {
    double s = 0.0;
    for (int d = 0; d < u.dim(); ++d) s += physical_energy(u.comp(d));
    return 0.5 * s;
}

/// Relative sup-norm of the spectral divergence against the field scale.
inline double divergence_error(const VectorField& u) {
    double scale = u.max_abs();
    if (scale == 0.0) return 0.0;
    return divergence(u).max_abs() / scale;
}

} // namespace qstrip
