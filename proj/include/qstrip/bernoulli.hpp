#pragma once

#include "qstrip/flow.hpp"

namespace qstrip {

/// Zero-mean pressure from the Poisson equation
/// lap p = -sum_jk d_j v_k d_k v_j with dealiased quadratic source.
/// The source has zero mean exactly when v is (spectrally) divergence
/// free; a NonZeroMeanRHS from here signals inconsistent input.
inline ScalarField compute_pressure(const FlowState& state) {
    return detail::flow_terms(state.v).pressure;
}

/// The Bernoulli function Q = 0.5|v|^2 + p and every pointwise quantity
/// the strip balance needs. dt_kin is the exact instantaneous rate
/// 0.5 d|v|^2/dt = v.(nu lap v - (v.grad)v - grad p), evaluated from the
/// momentum equation rather than by differencing snapshots.
struct BernoulliBundle {
    ScalarField Q;
    VectorField gradQ;
    ScalarField grad_norm;          // |grad Q|
    ScalarField dt_kin;             // 0.5 d|v|^2/dt
    ScalarField enstrophy_density;  // |omega|^2
    ScalarField pressure;           // zero-mean p
    double q_min = 0.0;
    double q_max = 0.0;
};

namespace detail {

inline BernoulliBundle bundle_from_terms(const FlowTerms& ft, double nu) {
    const Grid& g = ft.va.grid();
    BernoulliBundle b;

    ScalarField Q = ft.pressure;
    for (int d = 0; d < g.dim; ++d) {
        const ScalarField& c = ft.va.comp(d);
        for (std::size_t s = 0; s < Q.size(); ++s) Q[s] += 0.5 * c[s] * c[s];
    }
    b.Q = std::move(Q);

    b.gradQ = gradient(b.Q);
    ScalarField gn(g);
    for (std::size_t s = 0; s < gn.size(); ++s) {
        double acc = 0.0;
        for (int d = 0; d < g.dim; ++d) {
            double v = b.gradQ.comp(d)[s];
            acc += v * v;
        }
        gn[s] = std::sqrt(acc);
    }
    b.grad_norm = std::move(gn);

    VectorField grad_p = gradient(ft.pressure);
    ScalarField dtk(g);
    for (int d = 0; d < g.dim; ++d) {
        const ScalarField& v = ft.va.comp(d);
        const ScalarField& lap = ft.lap_v.comp(d);
        const ScalarField& adv = ft.advection.comp(d);
        const ScalarField& gp = grad_p.comp(d);
        for (std::size_t s = 0; s < dtk.size(); ++s)
            dtk[s] += v[s] * (nu * lap[s] - adv[s] - gp[s]);
    }
    b.dt_kin = std::move(dtk);

    b.enstrophy_density = ft.enstrophy;
    b.pressure = ft.pressure;
    b.q_min = b.Q.min();
    b.q_max = b.Q.max();
    return b;
}

} // namespace detail

/// Assemble the full bundle for one state. Propagates UnresolvedField.
inline BernoulliBundle compute_bundle(const FlowState& state) {
    if (!diagnose(state.v).well_resolved)
        throw UnresolvedField("compute_bundle: state not well resolved");
    return detail::bundle_from_terms(detail::flow_terms(state.v), state.nu);
}

/// Residual of the pointwise balance
///   0.5 d|v|^2/dt + nu |omega|^2 = nu lap Q - v.grad Q,
/// which is an algebraic identity for exact solutions; anything beyond
/// rounding plus aliasing tails is a code defect.
inline ScalarField pointwise_balance_residual(const BernoulliBundle& b, const FlowState& state) {
    const Grid& g = state.v.grid();
    ScalarField lapQ = laplacian(b.Q);
    VectorField va = dealias(state.v);
    ScalarField r(g);
    for (std::size_t s = 0; s < r.size(); ++s) {
        double v_dot_gradQ = 0.0;
        for (int d = 0; d < g.dim; ++d) v_dot_gradQ += va.comp(d)[s] * b.gradQ.comp(d)[s];
        r[s] = state.nu * lapQ[s] - v_dot_gradQ - b.dt_kin[s] -
               state.nu * b.enstrophy_density[s];
    }
    return r;
}

inline ScalarField pointwise_balance_residual(const FlowState& state) {
    return pointwise_balance_residual(compute_bundle(state), state);
}

/// Largest constituent max-norm of the balance, the natural scale for
/// judging the residual.
inline double pointwise_balance_scale(const BernoulliBundle& b, const FlowState& state) {
    ScalarField lapQ = laplacian(b.Q);
    VectorField va = dealias(state.v);
    double scale = 0.0;
    const Grid& g = state.v.grid();
    for (std::size_t s = 0; s < lapQ.size(); ++s) {
        double v_dot_gradQ = 0.0;
        for (int d = 0; d < g.dim; ++d) v_dot_gradQ += va.comp(d)[s] * b.gradQ.comp(d)[s];
        scale = std::max({scale, std::abs(state.nu * lapQ[s]), std::abs(v_dot_gradQ),
                          std::abs(b.dt_kin[s]),
                          std::abs(state.nu * b.enstrophy_density[s])});
    }
    return scale;
}

} // namespace qstrip
