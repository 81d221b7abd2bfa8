#pragma once

#include <cstdint>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "qstrip/bernoulli.hpp"
#include "qstrip/strip.hpp"

namespace qstrip {

/// All terms of the strip energy balance for one (alpha, beta) pair:
///   volume_term = integral over {alpha < Q < beta} of (0.5 d|v|^2/dt + nu |omega|^2)
///   beta_flux   = nu * surface integral of |grad Q| over {Q = beta}
///   alpha_flux  = same over {Q = alpha}
/// residual uses the orientation volume = beta_flux - alpha_flux;
/// residual_opposite records the reversed orientation for comparison.
/// One-sided limits: alpha at or below the sampled minimum makes the
/// region {Q < beta} with alpha_flux = 0 (and symmetrically for beta).
struct LedgerEntry {
    double alpha = 0.0;
    double beta = 0.0;
    bool alpha_open = false; // region extends to the minimum of Q
    bool beta_open = false;  // region extends to the maximum of Q
    double volume_term = 0.0;
    double beta_flux = 0.0;
    double alpha_flux = 0.0;
    double residual = 0.0;
    double residual_opposite = 0.0;
    double relative_residual = 0.0;
    RegularityReport alpha_regularity;
    RegularityReport beta_regularity;

    bool full_range() const { return alpha_open && beta_open; }
};

inline constexpr double residual_floor = 1e-14;

/// A Q range at rounding scale (constant Bernoulli function, e.g. any
/// Beltrami flow) carries no level-set structure: every interior level
/// would slice pure noise.
inline bool degenerate_q_range(double q_min, double q_max) {
    double scale = std::max({std::abs(q_min), std::abs(q_max), 1e-30});
    return !(q_max - q_min > 1e-12 * scale);
}

struct StateMetadata {
    int dim = 2;
    int n = 0;
    double nu = 0.0;
    double t = 0.0;
    std::string initial_condition;
    std::uint64_t seed = 0;
};

struct LedgerTable {
    std::vector<LedgerEntry> entries;
    StateMetadata meta;
    double q_min = 0.0;
    double q_max = 0.0;
};

namespace detail {

inline RegularityReport regularity_from_iso(const Isosurface& iso,
                                            const ScalarField& gradQ_norm, double c) {
    RegularityReport rep;
    rep.level = c;
    if (iso.empty()) {
        rep.is_regular = false;
        rep.degenerate = true;
        return rep;
    }
    std::vector<double> samples;
    samples.reserve(iso.elements.size() * 3);
    double mn = pos_infinity;
    for (const auto& e : iso.elements) {
        for (int i = 0; i < e.n_vertices; ++i) {
            double g = interpolate(gradQ_norm, e.vertex[i]);
            samples.push_back(g);
            mn = std::min(mn, g);
        }
        double g = interpolate(gradQ_norm, e.centroid);
        samples.push_back(g);
        mn = std::min(mn, g);
    }
    rep.min_grad = mn;
    rep.median_grad = median_of(samples);
    rep.is_regular = mn >= regularity_guard_fraction * median_of(gradQ_norm.values());
    return rep;
}

/// Flux and regularity for one level, extracting the surface once.
struct LevelQuadrature {
    double grad_surface_integral = 0.0; // surface integral of |grad Q|
    RegularityReport report;
};

inline LevelQuadrature level_quadrature(const BernoulliBundle& b, double c) {
    LevelQuadrature lq;
    Isosurface iso = extract_isosurface(b.Q, c);
    if (!iso.empty()) lq.grad_surface_integral = surface_integral(iso, b.grad_norm);
    lq.report = regularity_from_iso(iso, b.grad_norm, c);
    return lq;
}

inline ScalarField strip_integrand(const BernoulliBundle& b, double nu) {
    ScalarField f(b.Q.grid());
    for (std::size_t s = 0; s < f.size(); ++s)
        f[s] = b.dt_kin[s] + nu * b.enstrophy_density[s];
    return f;
}

inline LedgerEntry make_entry(const BernoulliBundle& b, const ScalarField& integrand,
                              double nu, double alpha, double beta,
                              const LevelQuadrature* alpha_lq,
                              const LevelQuadrature* beta_lq) {
    LedgerEntry e;
    e.alpha = alpha;
    e.beta = beta;
    e.alpha_open = !(alpha > b.q_min); // includes -inf
    e.beta_open = !(beta < b.q_max);
    double lo = e.alpha_open ? neg_infinity : alpha;
    double hi = e.beta_open ? pos_infinity : beta;
    e.volume_term = strip_volume_integral(integrand, b.Q, lo, hi);
    if (!e.alpha_open && alpha_lq) {
        e.alpha_flux = nu * alpha_lq->grad_surface_integral;
        e.alpha_regularity = alpha_lq->report;
    } else {
        e.alpha_regularity.level = alpha;
        e.alpha_regularity.degenerate = true;
    }
    if (!e.beta_open && beta_lq) {
        e.beta_flux = nu * beta_lq->grad_surface_integral;
        e.beta_regularity = beta_lq->report;
    } else {
        e.beta_regularity.level = beta;
        e.beta_regularity.degenerate = true;
    }
    e.residual = e.volume_term - (e.beta_flux - e.alpha_flux);
    e.residual_opposite = e.volume_term - (e.alpha_flux - e.beta_flux);
    e.relative_residual =
        std::abs(e.residual) /
        std::max({std::abs(e.volume_term), e.beta_flux + e.alpha_flux, residual_floor});
    return e;
}

} // namespace detail

/// Assemble one strip entry. Levels at or beyond the sampled range of Q
/// are treated as the exact one-sided limits.
inline LedgerEntry assemble_entry(const BernoulliBundle& b, const FlowState& state,
                                  double alpha, double beta) {
    if (!(alpha < beta)) throw InvalidStrip("assemble_entry: require alpha < beta");
    ScalarField integrand = detail::strip_integrand(b, state.nu);
    bool alpha_open = !(alpha > b.q_min);
    bool beta_open = !(beta < b.q_max);
    detail::LevelQuadrature alq, blq;
    if (!alpha_open) alq = detail::level_quadrature(b, alpha);
    if (!beta_open) blq = detail::level_quadrature(b, beta);
    return detail::make_entry(b, integrand, state.nu, alpha, beta,
                              alpha_open ? nullptr : &alq, beta_open ? nullptr : &blq);
}

/// Entries for every adjacent level pair, the two one-sided strips, and
/// the full-range entry, sorted by (alpha, beta). An empty level list
/// yields the single full-range entry.
inline LedgerTable sweep_levels(const BernoulliBundle& b, const FlowState& state,
                                std::vector<double> levels,
                                StateMetadata meta = {}) {
    std::sort(levels.begin(), levels.end());
    levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
    // levels at or beyond the sampled range only duplicate the one-sided
    // and full-range entries
    std::erase_if(levels, [&](double c) { return c <= b.q_min || c >= b.q_max; });
    if (degenerate_q_range(b.q_min, b.q_max)) levels.clear();
    ScalarField integrand = detail::strip_integrand(b, state.nu);

    std::vector<detail::LevelQuadrature> lq;
    lq.reserve(levels.size());
    for (double c : levels) lq.push_back(detail::level_quadrature(b, c));

    LedgerTable table;
    meta.dim = state.v.grid().dim;
    meta.n = state.v.grid().n;
    meta.nu = state.nu;
    meta.t = state.t;
    table.meta = meta;
    table.q_min = b.q_min;
    table.q_max = b.q_max;

    table.entries.push_back(detail::make_entry(b, integrand, state.nu, neg_infinity,
                                               pos_infinity, nullptr, nullptr));
    if (!levels.empty()) {
        table.entries.push_back(detail::make_entry(
            b, integrand, state.nu, neg_infinity, levels.front(), nullptr, &lq.front()));
        for (std::size_t i = 0; i + 1 < levels.size(); ++i)
            table.entries.push_back(detail::make_entry(b, integrand, state.nu, levels[i],
                                                       levels[i + 1], &lq[i], &lq[i + 1]));
        table.entries.push_back(detail::make_entry(b, integrand, state.nu, levels.back(),
                                                   pos_infinity, &lq.back(), nullptr));
    }
    std::sort(table.entries.begin(), table.entries.end(),
              [](const LedgerEntry& a, const LedgerEntry& b_) {
                  if (a.alpha != b_.alpha) return a.alpha < b_.alpha;
                  return a.beta < b_.beta;
              });
    return table;
}

/// Residual of the full-range entry: both fluxes vanish in the limit, so
/// this is the instantaneous global energy balance.
inline double verify_global_limit(const LedgerTable& table) {
    for (const auto& e : table.entries)
        if (e.full_range()) return e.residual;
    throw MissingFullRange("verify_global_limit: table lacks the full-range entry");
}

/// One-sided sign checks at a level c:
///   integral over {Q > c} must equal -flux(c) (nonpositive),
///   integral over {Q < c} must equal +flux(c) (nonnegative),
/// within a tolerance proportional to the flux magnitude.
struct SignCheck {
    double level = 0.0;
    double upper_volume = 0.0; // over {Q > level}
    double lower_volume = 0.0; // over {Q < level}
    double flux = 0.0;
    double tolerance = 0.0;
    bool regular = false;
    bool sign_ok = false;
};

inline constexpr double sign_tolerance_fraction = 0.02;

inline std::vector<SignCheck> verify_sign_constraints(const BernoulliBundle& b,
                                                      const FlowState& state,
                                                      const std::vector<double>& levels) {
    ScalarField integrand = detail::strip_integrand(b, state.nu);
    double l1 = 0.0;
    for (std::size_t s = 0; s < integrand.size(); ++s) l1 += std::abs(integrand[s]);
    l1 *= integrand.grid().cell_volume();
    // quadrature noise floor for the one-sided volume integrals
    double h = integrand.grid().spacing();
    double quad_floor = h * h * l1;

    std::vector<SignCheck> checks;
    checks.reserve(levels.size());
    for (double c : levels) {
        SignCheck sc;
        sc.level = c;
        if (c <= b.q_min || c >= b.q_max) {
            // degenerate: all terms vanish identically
            sc.tolerance = residual_floor;
            sc.regular = false;
            sc.sign_ok = true;
            checks.push_back(sc);
            continue;
        }
        auto lq = detail::level_quadrature(b, c);
        sc.flux = state.nu * lq.grad_surface_integral;
        sc.regular = lq.report.is_regular;
        sc.upper_volume = strip_volume_integral(integrand, b.Q, c, pos_infinity);
        sc.lower_volume = strip_volume_integral(integrand, b.Q, neg_infinity, c);
        sc.tolerance = sign_tolerance_fraction * sc.flux + quad_floor + residual_floor;
        sc.sign_ok = sc.upper_volume <= sc.tolerance && sc.lower_volume >= -sc.tolerance;
        checks.push_back(sc);
    }
    return checks;
}

// ---- convergence studies -------------------------------------------------

struct ConvergenceStripRow {
    double quantile_lo = 0.0;
    double quantile_hi = 0.0;
    std::vector<double> relative_residuals; // one per resolution
    double fitted_order = 0.0;
    bool excluded_by_guard = false;
    bool exact = false; // residuals at rounding level, no order claim
};

struct ConvergenceReport {
    std::vector<int> resolutions;
    std::vector<double> spacings;
    std::vector<ConvergenceStripRow> strips;
    std::vector<double> max_relative_residual; // per resolution, guarded strips only
    double overall_order = 0.0;
    bool monotone_decreasing = false;
};

/// Sample quantile (linear interpolation between order statistics).
inline double quantile(const ScalarField& f, double q) {
    std::vector<double> tmp(f.values());
    std::sort(tmp.begin(), tmp.end());
    double pos = q * static_cast<double>(tmp.size() - 1);
    std::size_t i = static_cast<std::size_t>(pos);
    if (i + 1 >= tmp.size()) return tmp.back();
    double t = pos - static_cast<double>(i);
    return tmp[i] + t * (tmp[i + 1] - tmp[i]);
}

namespace detail {

inline double fit_order(const std::vector<double>& h, const std::vector<double>& r) {
    // least squares slope of log r against log h
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::size_t m = h.size();
    for (std::size_t i = 0; i < m; ++i) {
        double x = std::log(h[i]), y = std::log(std::max(r[i], 1e-300));
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    double denom = m * sxx - sx * sx;
    return denom == 0.0 ? 0.0 : (m * sxy - sx * sy) / denom;
}

} // namespace detail

/// Run the strip balance at a sequence of resolutions (each double the
/// last, at least two) and fit the convergence order of the relative
/// residual for each quantile strip. Strips whose levels ever fail the
/// regularity guard are excluded from order claims.
inline ConvergenceReport convergence_study(
    const std::function<FlowState(const Grid&)>& initial_condition, int dim,
    const std::vector<double>& strip_quantiles, const std::vector<int>& resolutions) {
    if (resolutions.size() < 2)
        throw ConfigError("convergence_study: need at least two resolutions");
    for (std::size_t i = 1; i < resolutions.size(); ++i)
        if (resolutions[i] != 2 * resolutions[i - 1])
            throw ConfigError("convergence_study: resolutions must double");
    if (strip_quantiles.size() < 2)
        throw ConfigError("convergence_study: need at least two quantiles");

    ConvergenceReport rep;
    rep.resolutions = resolutions;
    std::size_t nstrips = strip_quantiles.size() - 1;
    rep.strips.resize(nstrips);
    for (std::size_t s = 0; s < nstrips; ++s) {
        rep.strips[s].quantile_lo = strip_quantiles[s];
        rep.strips[s].quantile_hi = strip_quantiles[s + 1];
    }

    for (int n : resolutions) {
        Grid g(dim, n);
        rep.spacings.push_back(g.spacing());
        FlowState state = initial_condition(g);
        BernoulliBundle b = compute_bundle(state);
        std::vector<double> levels;
        levels.reserve(strip_quantiles.size());
        for (double q : strip_quantiles) levels.push_back(quantile(b.Q, q));

        double worst = 0.0;
        for (std::size_t s = 0; s < nstrips; ++s) {
            if (!(levels[s] < levels[s + 1])) {
                // quantiles coincide (e.g. constant Q): nothing to measure
                rep.strips[s].relative_residuals.push_back(0.0);
                continue;
            }
            LedgerEntry e = assemble_entry(b, state, levels[s], levels[s + 1]);
            rep.strips[s].relative_residuals.push_back(e.relative_residual);
            bool guarded = (e.alpha_regularity.is_regular || e.alpha_regularity.degenerate) &&
                           (e.beta_regularity.is_regular || e.beta_regularity.degenerate);
            if (!guarded) rep.strips[s].excluded_by_guard = true;
            if (guarded) worst = std::max(worst, e.relative_residual);
        }
        rep.max_relative_residual.push_back(worst);
    }

    for (auto& row : rep.strips) {
        row.exact = true;
        for (double r : row.relative_residuals)
            if (r > 1e-13) row.exact = false;
        if (!row.excluded_by_guard && !row.exact)
            row.fitted_order = detail::fit_order(rep.spacings, row.relative_residuals);
    }
    rep.overall_order = detail::fit_order(rep.spacings, rep.max_relative_residual);
    rep.monotone_decreasing = true;
    for (std::size_t i = 1; i < rep.max_relative_residual.size(); ++i)
        if (rep.max_relative_residual[i] >= rep.max_relative_residual[i - 1])
            rep.monotone_decreasing = false;
    return rep;
}

// ---- serialization --------------------------------------------------------

inline void write_csv(std::ostream& os, const LedgerTable& table) {
    os.precision(17);
    os << "alpha,beta,volume_term,beta_flux,alpha_flux,residual,relative_residual,"
          "alpha_regular,beta_regular,min_grad_alpha,min_grad_beta\n";
    for (const auto& e : table.entries) {
        if (e.alpha_open)
            os << "-inf";
        else
            os << e.alpha;
        os << ',';
        if (e.beta_open)
            os << "inf";
        else
            os << e.beta;
        os << ',' << e.volume_term << ',' << e.beta_flux << ',' << e.alpha_flux << ','
           << e.residual << ',' << e.relative_residual << ','
           << (e.alpha_regularity.is_regular ? 1 : 0) << ','
           << (e.beta_regularity.is_regular ? 1 : 0) << ',' << e.alpha_regularity.min_grad
           << ',' << e.beta_regularity.min_grad << '\n';
    }
}

inline nlohmann::json to_json(const RegularityReport& r) {
    return {{"level", r.level},
            {"min_grad", r.min_grad},
            {"median_grad", r.median_grad},
            {"is_regular", r.is_regular},
            {"degenerate", r.degenerate}};
}

inline nlohmann::json to_json(const LedgerEntry& e) {
    nlohmann::json j;
    j["alpha"] = e.alpha_open ? nlohmann::json("-inf") : nlohmann::json(e.alpha);
    j["beta"] = e.beta_open ? nlohmann::json("inf") : nlohmann::json(e.beta);
    j["volume_term"] = e.volume_term;
    j["beta_flux"] = e.beta_flux;
    j["alpha_flux"] = e.alpha_flux;
    j["residual"] = e.residual;
    j["residual_opposite_orientation"] = e.residual_opposite;
    j["relative_residual"] = e.relative_residual;
    j["alpha_regularity"] = to_json(e.alpha_regularity);
    j["beta_regularity"] = to_json(e.beta_regularity);
    return j;
}

inline nlohmann::json to_json(const StateMetadata& m) {
    return {{"dim", m.dim},          {"n", m.n},
            {"nu", m.nu},            {"t", m.t},
            {"initial_condition", m.initial_condition}, {"seed", m.seed}};
}

inline nlohmann::json to_json(const LedgerTable& t) {
    nlohmann::json j;
    j["metadata"] = to_json(t.meta);
    j["q_min"] = t.q_min;
    j["q_max"] = t.q_max;
    j["entries"] = nlohmann::json::array();
    for (const auto& e : t.entries) j["entries"].push_back(to_json(e));
    return j;
}

inline nlohmann::json to_json(const ConvergenceReport& r) {
    nlohmann::json j;
    j["resolutions"] = r.resolutions;
    j["spacings"] = r.spacings;
    j["max_relative_residual"] = r.max_relative_residual;
    j["overall_order"] = r.overall_order;
    j["monotone_decreasing"] = r.monotone_decreasing;
    j["strips"] = nlohmann::json::array();
    for (const auto& s : r.strips) {
        nlohmann::json row;
        row["quantile_lo"] = s.quantile_lo;
        row["quantile_hi"] = s.quantile_hi;
        row["relative_residuals"] = s.relative_residuals;
        row["excluded_by_guard"] = s.excluded_by_guard;
        if (s.exact)
            row["order"] = "exact";
        else if (s.excluded_by_guard)
            row["order"] = "excluded";
        else
            row["order"] = s.fitted_order;
        j["strips"].push_back(row);
    }
    return j;
}

} // namespace qstrip
