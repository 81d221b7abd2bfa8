#pragma once

#include <algorithm>
#include <limits>
#include <vector>

#include "qstrip/isosurface.hpp"

namespace qstrip {

inline constexpr double neg_infinity = -std::numeric_limits<double>::infinity();
inline constexpr double pos_infinity = std::numeric_limits<double>::infinity();

inline double median_of(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    std::vector<double> tmp(v);
    std::size_t mid = tmp.size() / 2;
    std::nth_element(tmp.begin(), tmp.begin() + mid, tmp.end());
    return tmp[mid];
}

namespace detail {

/// Fraction of a triangle (linear interpolant, sorted vertex values
/// q0 <= q1 <= q2) lying below level c.
inline double triangle_below_fraction(double q0, double q1, double q2, double c) {
    if (c <= q0) return 0.0;
    if (c >= q2) return 1.0;
    if (c <= q1) {
        double r = (c - q0);
        return r * r / ((q1 - q0) * (q2 - q0));
    }
    double r = (q2 - c);
    return 1.0 - r * r / ((q2 - q0) * (q2 - q1));
}

/// Fraction of a tetrahedron (sorted values) below level c. The middle
/// branch is a divided difference of phi(s) = (c-s)^3/((q2-s)(q3-s));
/// when q0 and q1 nearly coincide it switches to the derivative form to
/// avoid cancellation.
inline double tet_below_fraction(double q0, double q1, double q2, double q3, double c) {
    if (c <= q0) return 0.0;
    if (c >= q3) return 1.0;
    if (c <= q1) {
        double r = c - q0;
        return r * r * r / ((q1 - q0) * (q2 - q0) * (q3 - q0));
    }
    if (c >= q2) {
        double r = q3 - c;
        return 1.0 - r * r * r / ((q3 - q0) * (q3 - q1) * (q3 - q2));
    }
    auto phi = [&](double s) {
        double r = c - s;
        return r * r * r / ((q2 - s) * (q3 - s));
    };
    double span = q3 - q0;
    if (q1 - q0 > 1e-6 * span) return (phi(q0) - phi(q1)) / (q1 - q0);
    double s = 0.5 * (q0 + q1);
    double r = c - s, d2 = q2 - s, d3 = q3 - s;
    double dphi = (-3.0 * r * r * d2 * d3 + r * r * r * (d2 + d3)) / (d2 * d2 * d3 * d3);
    return -dphi;
}

inline double sort3_below(double a, double b, double c_, double lvl) {
    double q[3] = {a, b, c_};
    std::sort(q, q + 3);
    return triangle_below_fraction(q[0], q[1], q[2], lvl);
}

inline double sort4_below(double a, double b, double c_, double d, double lvl) {
    double q[4] = {a, b, c_, d};
    std::sort(q, q + 4);
    return tet_below_fraction(q[0], q[1], q[2], q[3], lvl);
}

} // namespace detail

/// Integral of f over the strip {alpha < Q < beta}, by the same simplex
/// decomposition as the isosurface extraction: per simplex, the vertex
/// mean of f weighted by the exact volume fraction of the slab of the
/// linear interpolant of Q. Pass -inf / +inf for one-sided regions.
/// Additivity in the level argument holds to rounding.
inline double strip_volume_integral(const ScalarField& f, const ScalarField& Q,
                                    double alpha, double beta) {
    if (f.grid() != Q.grid())
        throw GridMismatch("strip_volume_integral: field grids differ");
    const Grid& g = Q.grid();

    double acc = 0.0;
    if (g.dim == 2) {
        const double vol_simplex = g.cell_volume() / 2.0;
        for (int j = 0; j < g.n; ++j) {
            for (int i = 0; i < g.n; ++i) {
                double q00 = Q.at(i, j), q10 = Q.at(i + 1, j);
                double q01 = Q.at(i, j + 1), q11 = Q.at(i + 1, j + 1);
                double lo = std::min({q00, q10, q01, q11});
                double hi = std::max({q00, q10, q01, q11});
                if (hi < alpha || lo > beta) continue;
                double f00 = f.at(i, j), f10 = f.at(i + 1, j);
                double f01 = f.at(i, j + 1), f11 = f.at(i + 1, j + 1);
                // triangles (00,10,11) and (00,11,01)
                double w1 = detail::sort3_below(q00, q10, q11, beta) -
                            detail::sort3_below(q00, q10, q11, alpha);
                double w2 = detail::sort3_below(q00, q11, q01, beta) -
                            detail::sort3_below(q00, q11, q01, alpha);
                acc += vol_simplex * (w1 * (f00 + f10 + f11) / 3.0 +
                                      w2 * (f00 + f11 + f01) / 3.0);
            }
        }
    } else {
        const double vol_simplex = g.cell_volume() / 6.0;
        for (int k = 0; k < g.n; ++k) {
            for (int j = 0; j < g.n; ++j) {
                for (int i = 0; i < g.n; ++i) {
                    double qc[2][2][2], fc[2][2][2];
                    double lo = 1e300, hi = -1e300;
                    for (int dz = 0; dz < 2; ++dz)
                        for (int dy = 0; dy < 2; ++dy)
                            for (int dx = 0; dx < 2; ++dx) {
                                double q = Q.at(i + dx, j + dy, k + dz);
                                qc[dx][dy][dz] = q;
                                fc[dx][dy][dz] = f.at(i + dx, j + dy, k + dz);
                                lo = std::min(lo, q);
                                hi = std::max(hi, q);
                            }
                    if (hi < alpha || lo > beta) continue;
                    for (int perm = 0; perm < 6; ++perm) {
                        double qv[4], fv[4];
                        for (int s = 0; s < 4; ++s) {
                            auto lc = detail::kuhn_corner(perm, s);
                            qv[s] = qc[lc[0]][lc[1]][lc[2]];
                            fv[s] = fc[lc[0]][lc[1]][lc[2]];
                        }
                        double w = detail::sort4_below(qv[0], qv[1], qv[2], qv[3], beta) -
                                   detail::sort4_below(qv[0], qv[1], qv[2], qv[3], alpha);
                        acc += vol_simplex * w * (fv[0] + fv[1] + fv[2] + fv[3]) / 4.0;
                    }
                }
            }
        }
    }
    return acc;
}

/// Independent coarea-formula route to surface integrals: for each
/// adjacent level pair, the sharp-mask bin integral of g |grad Q| divided
/// by the bin width approximates the surface integral of g at the bin
/// midpoint. Deliberately uses plain sample masking and no extraction
/// machinery, so it can serve as an oracle for the direct quadrature.
inline std::vector<double> coarea_level_integral(const ScalarField& Q,
                                                 const ScalarField& gfield,
                                                 const std::vector<double>& levels) {
    if (Q.grid() != gfield.grid())
        throw GridMismatch("coarea_level_integral: field grids differ");
    for (std::size_t i = 1; i < levels.size(); ++i)
        if (!(levels[i] > levels[i - 1]))
            throw ConfigError("coarea_level_integral: levels must be strictly increasing");
    if (levels.size() < 2) return {};

    VectorField gq = gradient(Q);
    const Grid& g = Q.grid();
    std::vector<double> bins(levels.size() - 1, 0.0);
    const double cellvol = g.cell_volume();
    for (std::size_t s = 0; s < Q.size(); ++s) {
        double q = Q[s];
        if (q <= levels.front() || q >= levels.back()) continue;
        auto it = std::upper_bound(levels.begin(), levels.end(), q);
        std::size_t bin = static_cast<std::size_t>(it - levels.begin()) - 1;
        double gn = 0.0;
        for (int d = 0; d < g.dim; ++d) gn += gq.comp(d)[s] * gq.comp(d)[s];
        bins[bin] += gfield[s] * std::sqrt(gn) * cellvol;
    }
    for (std::size_t i = 0; i < bins.size(); ++i) bins[i] /= (levels[i + 1] - levels[i]);
    return bins;
}

/// Coarea estimate of the surface integral of g over {Q = c}: several
/// adjacent sharp-mask bins centred on c, combined by a quadratic
/// least-squares fit in the level, which removes the curvature bias of a
/// single wide bin while averaging the mask noise of narrow ones. The
/// window is sized against the per-cell level jump h |grad Q| (the mask
/// noise scale, much smaller in 3D where the boundary shell holds many
/// more cells) and must stay inside the sampled range of Q; when the two
/// requirements collide the estimate is not meaningful and `applicable`
/// is false.
struct CoareaEstimate {
    double value = 0.0;
    bool applicable = false;
};

inline CoareaEstimate coarea_flux_estimate(const ScalarField& Q,
                                           const ScalarField& gfield, double c) {
    CoareaEstimate est;
    const Grid& g = Q.grid();
    double q_min = Q.min(), q_max = Q.max();
    if (!(c > q_min && c < q_max)) return est;

    VectorField gq = gradient(Q);
    std::vector<double> gn(Q.size());
    for (std::size_t s = 0; s < Q.size(); ++s) {
        double acc = 0.0;
        for (int d = 0; d < g.dim; ++d) acc += gq.comp(d)[s] * gq.comp(d)[s];
        gn[s] = std::sqrt(acc);
    }
    double med = median_of(gn);
    double range = q_max - q_min;
    double noise_scale = g.spacing() * med;
    double W = g.dim == 2 ? std::max(0.05 * range, 6.0 * noise_scale)
                          : std::max(0.02 * range, 2.0 * noise_scale);
    double interior = 0.7 * std::min(c - q_min, q_max - c);
    if (W > interior) return est;

    constexpr int K = 8;
    std::vector<double> levels;
    levels.reserve(K + 1);
    for (int i = 0; i <= K; ++i) levels.push_back(c - W + 2.0 * W * i / K);
    auto bins = coarea_level_integral(Q, gfield, levels);

    // quadratic fit in t = bin midpoint - c, evaluated at t = 0
    double s0 = 0, s1 = 0, s2 = 0, s3 = 0, s4 = 0, y0 = 0, y1 = 0, y2 = 0;
    for (int i = 0; i < K; ++i) {
        double t = 0.5 * (levels[i] + levels[i + 1]) - c;
        double y = bins[i];
        s0 += 1;
        s1 += t;
        s2 += t * t;
        s3 += t * t * t;
        s4 += t * t * t * t;
        y0 += y;
        y1 += y * t;
        y2 += y * t * t;
    }
    double A[3][3] = {{s0, s1, s2}, {s1, s2, s3}, {s2, s3, s4}};
    double rhs[3] = {y0, y1, y2};
    for (int i = 0; i < 3; ++i) {
        int p = i;
        for (int r = i + 1; r < 3; ++r)
            if (std::abs(A[r][i]) > std::abs(A[p][i])) p = r;
        std::swap(A[i], A[p]);
        std::swap(rhs[i], rhs[p]);
        for (int r = i + 1; r < 3; ++r) {
            double f = A[r][i] / A[i][i];
            for (int cc = i; cc < 3; ++cc) A[r][cc] -= f * A[i][cc];
            rhs[r] -= f * rhs[i];
        }
    }
    double x[3];
    for (int i = 2; i >= 0; --i) {
        double acc = rhs[i];
        for (int cc = i + 1; cc < 3; ++cc) acc -= A[i][cc] * x[cc];
        x[i] = acc / A[i][i];
    }
    est.value = x[0];
    est.applicable = true;
    return est;
}

/// Near-critical-level guard. Almost every level of a smooth function is
/// regular; this reports how close a given one comes to the exceptional
/// set by the minimum of |grad Q| sampled over the extracted level
/// (element vertices and centroids).
struct RegularityReport {
    double level = 0.0;
    double min_grad = 0.0;
    double median_grad = 0.0;
    bool is_regular = false;
    bool degenerate = false; // level at or beyond the sampled range
};

/// min |grad Q| on the level must reach this fraction of the torus-wide
/// median |grad Q| for the level to count as regular.
inline constexpr double regularity_guard_fraction = 1e-3;

inline RegularityReport check_regularity(const ScalarField& Q,
                                         const ScalarField& gradQ_norm, double c) {
    if (Q.grid() != gradQ_norm.grid())
        throw GridMismatch("check_regularity: field grids differ");
    RegularityReport rep;
    rep.level = c;
    Isosurface iso = extract_isosurface(Q, c);
    if (iso.empty()) {
        rep.min_grad = 0.0;
        rep.median_grad = 0.0;
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
    double torus_median = median_of(gradQ_norm.values());
    rep.is_regular = mn >= regularity_guard_fraction * torus_median;
    return rep;
}

/// A strip {alpha < Q < beta} with the regularity verdicts of its bounds.
struct LevelStrip {
    double alpha = 0.0;
    double beta = 0.0;
    RegularityReport alpha_report;
    RegularityReport beta_report;
};

inline LevelStrip make_level_strip(const ScalarField& Q, const ScalarField& gradQ_norm,
                                   double alpha, double beta) {
    if (!(alpha < beta)) throw InvalidStrip("make_level_strip: require alpha < beta");
    return {alpha, beta, check_regularity(Q, gradQ_norm, alpha),
            check_regularity(Q, gradQ_norm, beta)};
}

} // namespace qstrip
