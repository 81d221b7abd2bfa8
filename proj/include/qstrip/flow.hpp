#pragma once

#include <cstdint>
#include <random>
#include <string>

#include "qstrip/spectral.hpp"

namespace qstrip {

/// One snapshot of a flow: divergence-free velocity, viscosity, time.
/// nu = 0 selects the inviscid (Euler) case.
struct FlowState {
    VectorField v;
    double nu = 0.0;
    double t = 0.0;
};

/// Result of one right-hand-side evaluation: the velocity tendency and the
/// zero-mean pressure that enforces incompressibility.
struct RhsResult {
    VectorField dvdt;
    ScalarField p;
};

namespace detail {

/// Shared building blocks of the momentum equation, all formed from the
/// dealiased velocity so that stepping and diagnostics use identical
/// grid functions:
///   grad[k]    gradient of component k
///   advection  (v.grad)v, dealiased
///   p_source   -sum_jk d_j v_k d_k v_j, dealiased
///   pressure   zero-mean Poisson solve of p_source
///   lap_v      componentwise Laplacian
///   enstrophy  |omega|^2
struct FlowTerms {
    VectorField va; // dealiased velocity
    std::vector<VectorField> grad;
    VectorField advection;
    ScalarField p_source;
    ScalarField pressure;
    VectorField lap_v;
    ScalarField enstrophy;
};

inline FlowTerms flow_terms(const VectorField& v) {
    const Grid& g = v.grid();
    FlowTerms ft;
    ft.va = dealias(v);

    ft.grad.reserve(g.dim);
    for (int k = 0; k < g.dim; ++k) ft.grad.push_back(gradient(ft.va.comp(k)));

    // advective form (v.grad)v_i = sum_j v_j d_j v_i; factors are already
    // band-limited, the product is truncated back below the cutoff
    std::vector<ScalarField> adv;
    adv.reserve(g.dim);
    for (int i = 0; i < g.dim; ++i) {
        ScalarField a(g);
        for (int j = 0; j < g.dim; ++j) {
            const ScalarField& vj = ft.va.comp(j);
            const ScalarField& dji = ft.grad[i].comp(j);
            for (std::size_t s = 0; s < a.size(); ++s) a[s] += vj[s] * dji[s];
        }
        adv.push_back(dealias(a));
    }
    ft.advection = VectorField(g, std::move(adv));

    ScalarField src(g);
    for (int j = 0; j < g.dim; ++j)
        for (int k = 0; k < g.dim; ++k) {
            const ScalarField& djk = ft.grad[k].comp(j); // d_j v_k
            const ScalarField& dkj = ft.grad[j].comp(k); // d_k v_j
            for (std::size_t s = 0; s < src.size(); ++s) src[s] -= djk[s] * dkj[s];
        }
    ft.p_source = dealias(src);
    ft.pressure = solve_poisson(ft.p_source);

    std::vector<ScalarField> lap;
    lap.reserve(g.dim);
    for (int k = 0; k < g.dim; ++k) lap.push_back(laplacian(ft.va.comp(k)));
    ft.lap_v = VectorField(g, std::move(lap));

    ScalarField ens(g);
    if (g.dim == 2) {
        for (std::size_t s = 0; s < ens.size(); ++s) {
            double w = ft.grad[1].comp(0)[s] - ft.grad[0].comp(1)[s];
            ens[s] = w * w;
        }
    } else {
        for (std::size_t s = 0; s < ens.size(); ++s) {
            double w1 = ft.grad[2].comp(1)[s] - ft.grad[1].comp(2)[s];
            double w2 = ft.grad[0].comp(2)[s] - ft.grad[2].comp(0)[s];
            double w3 = ft.grad[1].comp(0)[s] - ft.grad[0].comp(1)[s];
            ens[s] = w1 * w1 + w2 * w2 + w3 * w3;
        }
    }
    ft.enstrophy = ens;
    return ft;
}

} // namespace detail

enum class RhsForm {
    projection,        // dvdt = nu lap v - P[(v.grad)v]
    pressure_gradient, // dvdt = nu lap v - (v.grad)v - grad p
};

/// Momentum-equation right-hand side. The two forms agree to projection
/// tolerance; the projection form is the default and keeps dvdt
/// divergence-free. Throws UnresolvedField when the state carries too much
/// energy near the grid cutoff to step reliably.
inline RhsResult ns_rhs(const FlowState& state, RhsForm form = RhsForm::projection) {
    if (diagnose(state.v).high_mode_energy_fraction >=
        SpectralDiagnostics::stepping_threshold)
        throw UnresolvedField("ns_rhs: high-wavenumber energy fraction exceeds " +
                              std::to_string(SpectralDiagnostics::stepping_threshold));
    const Grid& g = state.v.grid();
    detail::FlowTerms ft = detail::flow_terms(state.v);

    VectorField dvdt(g);
    if (form == RhsForm::projection) {
        VectorField adv_sol = leray_project(ft.advection);
        std::vector<ScalarField> comps;
        comps.reserve(g.dim);
        for (int d = 0; d < g.dim; ++d)
            comps.push_back(state.nu * ft.lap_v.comp(d) - adv_sol.comp(d));
        dvdt = VectorField(g, std::move(comps), true);
    } else {
        VectorField grad_p = gradient(ft.pressure);
        std::vector<ScalarField> comps;
        comps.reserve(g.dim);
        for (int d = 0; d < g.dim; ++d)
            comps.push_back(state.nu * ft.lap_v.comp(d) - ft.advection.comp(d) -
                            grad_p.comp(d));
        dvdt = VectorField(g, std::move(comps));
    }
    return {std::move(dvdt), std::move(ft.pressure)};
}

/// Largest advective CFL number dt * max|v| / h that step_rk4 accepts.
inline constexpr double cfl_limit = 0.5;

/// Classical fourth-order Runge-Kutta step; the result is re-projected
/// and t advances by dt. Throws CFLViolation for unstable step sizes.
inline FlowState step_rk4(const FlowState& state, double dt) {
    if (dt <= 0.0) throw CFLViolation("step_rk4: dt must be positive");
    const Grid& g = state.v.grid();
    double cfl = dt * state.v.max_norm() / g.spacing();
    if (cfl > cfl_limit)
        throw CFLViolation("step_rk4: CFL number " + std::to_string(cfl) +
                           " exceeds limit " + std::to_string(cfl_limit));

    auto rhs = [&](const VectorField& v) {
        FlowState s{v, state.nu, state.t};
        return ns_rhs(s).dvdt;
    };
    VectorField k1 = rhs(state.v);
    VectorField k2 = rhs(state.v + (0.5 * dt) * k1);
    VectorField k3 = rhs(state.v + (0.5 * dt) * k2);
    VectorField k4 = rhs(state.v + dt * k3);

    VectorField vnew =
        state.v + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    vnew = leray_project(vnew);
    return {std::move(vnew), state.nu, state.t + dt};
}

// ---- initial conditions -------------------------------------------------

/// Planar Taylor-Green vortex v = (sin x cos y, -cos x sin y).
/// Exact Navier-Stokes solution decaying as exp(-2 nu t); steady for nu=0.
inline FlowState init_taylor_green_2d(const Grid& g, double nu = 0.0) {
    if (g.dim != 2) throw ConfigError("init_taylor_green_2d: grid must be 2D");
    VectorField v(g);
    const double h = g.spacing();
    for (int j = 0; j < g.n; ++j)
        for (int i = 0; i < g.n; ++i) {
            double x = i * h, y = j * h;
            v.comp(0)[g.index(i, j)] = std::sin(x) * std::cos(y);
            v.comp(1)[g.index(i, j)] = -std::cos(x) * std::sin(y);
        }
    v.set_divergence_free(true);
    return {std::move(v), nu, 0.0};
}

/// Arnold-Beltrami-Childress flow, a Beltrami field (curl v = v).
inline FlowState init_abc_3d(const Grid& g, double A, double B, double C,
                             double nu = 0.0) {
    if (g.dim != 3) throw ConfigError("init_abc_3d: grid must be 3D");
    VectorField v(g);
    const double h = g.spacing();
    for (int k = 0; k < g.n; ++k)
        for (int j = 0; j < g.n; ++j)
            for (int i = 0; i < g.n; ++i) {
                double x = i * h, y = j * h, z = k * h;
                std::size_t s = g.index(i, j, k);
                v.comp(0)[s] = A * std::sin(z) + C * std::cos(y);
                v.comp(1)[s] = B * std::sin(x) + A * std::cos(z);
                v.comp(2)[s] = C * std::sin(y) + B * std::cos(x);
            }
    v.set_divergence_free(true);
    return {std::move(v), nu, 0.0};
}

namespace detail {

/// Two independent standard Gaussians from a counter-based hash of the
/// mode indices (splitmix64 + Box-Muller). Grid-independent: the same
/// (seed, component, wavenumber) always yields the same draw.
inline std::pair<double, double> mode_gaussians(std::uint64_t seed, int comp, int kx,
                                                int ky, int kz) {
    auto mix = [](std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    };
    std::uint64_t h = seed;
    for (std::uint64_t w : {std::uint64_t(comp) + 1, std::uint64_t(std::int64_t(kx)),
                            std::uint64_t(std::int64_t(ky)), std::uint64_t(std::int64_t(kz))})
        h = mix(h + 0x9e3779b97f4a7c15ull + w);
    std::uint64_t h2 = mix(h + 0x9e3779b97f4a7c15ull);
    double u1 = (static_cast<double>(h >> 11) + 1.0) / 9007199254740993.0; // (0, 1]
    double u2 = static_cast<double>(h2 >> 11) / 9007199254740992.0;        // [0, 1)
    double r = std::sqrt(-2.0 * std::log(u1));
    return {r * std::cos(two_pi * u2), r * std::sin(two_pi * u2)};
}

} // namespace detail

/// Leray-projected random band-limited field with shell energy peaked
/// near peak_wavenumber, rescaled so the rms velocity equals amplitude.
/// Coefficients are drawn per mode from a counter-based hash, so the same
/// seed describes the same smooth field at every resolution that can
/// carry it; the spectral support is capped at min(2*peak_wavenumber,
/// n/6), which keeps triple products alias-free on the grid.
inline FlowState init_random_solenoidal(const Grid& g, std::uint64_t seed,
                                        int peak_wavenumber, double amplitude,
                                        double nu = 0.0) {
    if (peak_wavenumber < 1)
        throw ConfigError("init_random_solenoidal: peak_wavenumber must be >= 1");
    const int cap = std::min(2 * peak_wavenumber, g.n / 6);
    if (cap < 1)
        throw ConfigError("init_random_solenoidal: grid too coarse for requested peak");

    std::vector<ScalarField> comps;
    comps.reserve(g.dim);
    for (int d = 0; d < g.dim; ++d) {
        Spectrum s(detail::FftPlans::spectral_size(g));
        detail::for_each_mode(g, [&](std::size_t idx, int kx, int ky, int kz) {
            int kmax = std::max({std::abs(kx), std::abs(ky), std::abs(kz)});
            if (kmax == 0 || kmax > cap) return;
            // the kx = 0 plane carries both halves of each conjugate pair
            bool conjugate = false;
            int cy = ky, cz = kz;
            if (kx == 0 && (ky < 0 || (ky == 0 && kz < 0))) {
                conjugate = true;
                cy = -ky;
                cz = -kz;
            }
            double k = std::sqrt(double(kx) * kx + double(ky) * ky + double(kz) * kz);
            double kr = k / peak_wavenumber;
            double w = kr * kr * std::exp(-kr * kr);
            auto [g1, g2] = detail::mode_gaussians(seed, d, kx, cy, cz);
            std::complex<double> c = w * std::complex<double>(g1, g2);
            s[idx] = conjugate ? std::conj(c) : c;
        });
        comps.push_back(to_physical(g, std::move(s)));
    }
    VectorField v = leray_project(VectorField(g, std::move(comps)));
    double rms = std::sqrt(2.0 * kinetic_energy(v) / std::pow(two_pi, g.dim));
    if (rms > 0.0) {
        v = (amplitude / rms) * v;
        v.set_divergence_free(true);
    }
    return {std::move(v), nu, 0.0};
}

} // namespace qstrip
