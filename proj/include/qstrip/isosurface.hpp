#pragma once

#include <array>
#include <ostream>
#include <vector>

#include "qstrip/field.hpp"

namespace qstrip {

/// One element of an extracted level set: a segment (2D, 2 vertices,
/// measure = length) or a triangle (3D, 3 vertices, measure = area).
/// unit_normal points in the direction of increasing Q, so it is the
/// outward normal of the sublevel set {Q < c}.
struct SurfaceElement {
    std::array<Vec3, 3> vertex;
    int n_vertices = 0;
    double measure = 0.0;
    Vec3 centroid;
    Vec3 unit_normal;
};

/// Level set of a scalar field on the periodic grid. Extraction splits
/// each cell into simplices (2 triangles per square, 6 tetrahedra per
/// cube, the translation-invariant Kuhn split) and contours the linear
/// interpolant per simplex. The split is conforming across cell faces and
/// across the periodic wrap, so extracted surfaces are closed: every
/// element edge is shared with exactly one neighbouring element.
struct Isosurface {
    Grid grid;
    double level = 0.0;
    std::vector<SurfaceElement> elements;
    double total_measure = 0.0;

    bool empty() const { return elements.empty(); }
};

namespace detail {

// Linear-interpolant gradient over a triangle (z components ignored).
inline Vec3 triangle_gradient(const std::array<Vec3, 3>& p, const std::array<double, 3>& q) {
    double ax = p[1].x - p[0].x, ay = p[1].y - p[0].y;
    double bx = p[2].x - p[0].x, by = p[2].y - p[0].y;
    double det = ax * by - ay * bx;
    if (det == 0.0) return {0.0, 0.0, 0.0};
    double r1 = q[1] - q[0], r2 = q[2] - q[0];
    return {(r1 * by - r2 * ay) / det, (ax * r2 - bx * r1) / det, 0.0};
}

// Linear-interpolant gradient over a tetrahedron (3x3 Cramer solve).
inline Vec3 tet_gradient(const std::array<Vec3, 4>& p, const std::array<double, 4>& q) {
    Vec3 a = p[1] - p[0], b = p[2] - p[0], c = p[3] - p[0];
    double r1 = q[1] - q[0], r2 = q[2] - q[0], r3 = q[3] - q[0];
    Vec3 bxc = b.cross(c), cxa = c.cross(a), axb = a.cross(b);
    double det = a.dot(bxc);
    if (det == 0.0) return {0.0, 0.0, 0.0};
    return {(r1 * bxc.x + r2 * cxa.x + r3 * axb.x) / det,
            (r1 * bxc.y + r2 * cxa.y + r3 * axb.y) / det,
            (r1 * bxc.z + r2 * cxa.z + r3 * axb.z) / det};
}

inline Vec3 edge_cut(const Vec3& pa, double qa, const Vec3& pb, double qb, double c) {
    double t = (c - qa) / (qb - qa);
    return pa + (pb - pa) * t;
}

// Vertices are classified as above when q >= c, which fixes a
// deterministic convention for samples exactly on the level.
inline void contour_triangle(const std::array<Vec3, 3>& p, const std::array<double, 3>& q,
                             double c, double min_measure,
                             std::vector<SurfaceElement>& out) {
    bool above[3];
    int n_above = 0;
    for (int i = 0; i < 3; ++i) {
        above[i] = q[i] >= c;
        n_above += above[i];
    }
    if (n_above == 0 || n_above == 3) return;

    // the lone vertex on the minority side
    bool minority_above = n_above == 1;
    int lone = 0;
    for (int i = 0; i < 3; ++i)
        if (above[i] == minority_above) lone = i;
    int o1 = (lone + 1) % 3, o2 = (lone + 2) % 3;

    SurfaceElement e;
    e.n_vertices = 2;
    e.vertex[0] = edge_cut(p[lone], q[lone], p[o1], q[o1], c);
    e.vertex[1] = edge_cut(p[lone], q[lone], p[o2], q[o2], c);
    Vec3 d = e.vertex[1] - e.vertex[0];
    e.measure = d.norm();
    if (e.measure < min_measure) return;
    e.centroid = (e.vertex[0] + e.vertex[1]) * 0.5;
    Vec3 g = triangle_gradient(p, q);
    double gn = g.norm();
    if (gn == 0.0) return;
    e.unit_normal = g * (1.0 / gn);
    out.push_back(e);
}

inline void push_triangle(const Vec3& a, const Vec3& b, const Vec3& c_, const Vec3& unit_n,
                          double min_measure, std::vector<SurfaceElement>& out) {
    SurfaceElement e;
    e.n_vertices = 3;
    e.vertex = {a, b, c_};
    Vec3 cr = (b - a).cross(c_ - a);
    e.measure = 0.5 * cr.norm();
    if (e.measure < min_measure) return;
    e.centroid = (a + b + c_) * (1.0 / 3.0);
    e.unit_normal = unit_n;
    out.push_back(e);
}

inline void contour_tet(const std::array<Vec3, 4>& p, const std::array<double, 4>& q,
                        double c, double min_measure, std::vector<SurfaceElement>& out) {
    bool above[4];
    int n_above = 0;
    for (int i = 0; i < 4; ++i) {
        above[i] = q[i] >= c;
        n_above += above[i];
    }
    if (n_above == 0 || n_above == 4) return;

    Vec3 g = tet_gradient(p, q);
    double gn = g.norm();
    if (gn == 0.0) return;
    Vec3 unit_n = g * (1.0 / gn);

    if (n_above == 1 || n_above == 3) {
        bool minority_above = n_above == 1;
        int lone = 0;
        int others[3];
        int m = 0;
        for (int i = 0; i < 4; ++i) {
            if (above[i] == minority_above)
                lone = i;
            else
                others[m++] = i;
        }
        Vec3 e0 = edge_cut(p[lone], q[lone], p[others[0]], q[others[0]], c);
        Vec3 e1 = edge_cut(p[lone], q[lone], p[others[1]], q[others[1]], c);
        Vec3 e2 = edge_cut(p[lone], q[lone], p[others[2]], q[others[2]], c);
        push_triangle(e0, e1, e2, unit_n, min_measure, out);
    } else {
        int a[2], b[2];
        int na = 0, nb = 0;
        for (int i = 0; i < 4; ++i)
            (above[i] ? a[na++] : b[nb++]) = i;
        // quad cycle m11-m12-m22-m21; consecutive corners share a tet vertex,
        // so each quad edge lies in a tet face
        Vec3 m11 = edge_cut(p[a[0]], q[a[0]], p[b[0]], q[b[0]], c);
        Vec3 m12 = edge_cut(p[a[0]], q[a[0]], p[b[1]], q[b[1]], c);
        Vec3 m22 = edge_cut(p[a[1]], q[a[1]], p[b[1]], q[b[1]], c);
        Vec3 m21 = edge_cut(p[a[1]], q[a[1]], p[b[0]], q[b[0]], c);
        push_triangle(m11, m12, m22, unit_n, min_measure, out);
        push_triangle(m11, m22, m21, unit_n, min_measure, out);
    }
}

// Kuhn decomposition of the unit cube: one tetrahedron per axis
// permutation, all sharing the main diagonal. Cube faces are split along
// the same diagonal from both adjacent cubes.
inline constexpr int kuhn_perms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2},
                                         {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};

inline std::array<int, 3> kuhn_corner(int perm, int step) {
    // local corner after `step` axis moves of permutation `perm`
    std::array<int, 3> c = {0, 0, 0};
    for (int s = 0; s < step; ++s) c[kuhn_perms[perm][s]] = 1;
    return c;
}

} // namespace detail

/// Extract the level set {Q = c}. Empty when c lies outside the sampled
/// range. Deterministic: element order follows cell order.
inline Isosurface extract_isosurface(const ScalarField& Q, double c) {
    const Grid& g = Q.grid();
    Isosurface iso;
    iso.grid = g;
    iso.level = c;
    const double h = g.spacing();
    const double min_measure = 1e-12 * h;

    if (g.dim == 2) {
        for (int j = 0; j < g.n; ++j) {
            for (int i = 0; i < g.n; ++i) {
                double q00 = Q.at(i, j), q10 = Q.at(i + 1, j);
                double q01 = Q.at(i, j + 1), q11 = Q.at(i + 1, j + 1);
                double lo = std::min({q00, q10, q01, q11});
                double hi = std::max({q00, q10, q01, q11});
                if (c < lo || c > hi) continue;
                double x0 = i * h, y0 = j * h;
                Vec3 p00{x0, y0, 0}, p10{x0 + h, y0, 0};
                Vec3 p01{x0, y0 + h, 0}, p11{x0 + h, y0 + h, 0};
                detail::contour_triangle({p00, p10, p11}, {q00, q10, q11}, c,
                                         min_measure, iso.elements);
                detail::contour_triangle({p00, p11, p01}, {q00, q11, q01}, c,
                                         min_measure, iso.elements);
            }
        }
    } else {
        for (int k = 0; k < g.n; ++k) {
            for (int j = 0; j < g.n; ++j) {
                for (int i = 0; i < g.n; ++i) {
                    double qc[2][2][2];
                    double lo = 1e300, hi = -1e300;
                    for (int dz = 0; dz < 2; ++dz)
                        for (int dy = 0; dy < 2; ++dy)
                            for (int dx = 0; dx < 2; ++dx) {
                                double q = Q.at(i + dx, j + dy, k + dz);
                                qc[dx][dy][dz] = q;
                                lo = std::min(lo, q);
                                hi = std::max(hi, q);
                            }
                    if (c < lo || c > hi) continue;
                    double x0 = i * h, y0 = j * h, z0 = k * h;
                    for (int perm = 0; perm < 6; ++perm) {
                        std::array<Vec3, 4> p;
                        std::array<double, 4> q;
                        for (int s = 0; s < 4; ++s) {
                            auto lc = detail::kuhn_corner(perm, s);
                            p[s] = {x0 + lc[0] * h, y0 + lc[1] * h, z0 + lc[2] * h};
                            q[s] = qc[lc[0]][lc[1]][lc[2]];
                        }
                        detail::contour_tet(p, q, c, min_measure, iso.elements);
                    }
                }
            }
        }
    }
    double total = 0.0;
    for (const auto& e : iso.elements) total += e.measure;
    iso.total_measure = total;
    return iso;
}

/// Surface integral of a scalar field over the extracted level set:
/// one-point (centroid) quadrature per element.
inline double surface_integral(const Isosurface& iso, const ScalarField& gfield) {
    if (iso.grid != gfield.grid())
        throw GridMismatch("surface_integral: isosurface and field grids differ");
    double acc = 0.0;
    for (const auto& e : iso.elements)
        acc += e.measure * interpolate(gfield, e.centroid);
    return acc;
}

/// Net flux of a vector field through the closed level set; analytically
/// zero for divergence-free fields.
inline double flux_integral(const VectorField& v, const Isosurface& iso) {
    if (iso.grid != v.grid())
        throw GridMismatch("flux_integral: isosurface and field grids differ");
    double acc = 0.0;
    for (const auto& e : iso.elements)
        acc += e.measure * e.unit_normal.dot(interpolate(v, e.centroid));
    return acc;
}

/// Integral of |v| over the level set, the natural scale for flux residuals.
inline double speed_integral(const VectorField& v, const Isosurface& iso) {
    if (iso.grid != v.grid())
        throw GridMismatch("speed_integral: isosurface and field grids differ");
    double acc = 0.0;
    for (const auto& e : iso.elements)
        acc += e.measure * interpolate(v, e.centroid).norm();
    return acc;
}

/// Plain-text mesh dump, one element per line: vertex coordinates,
/// measure, unit normal.
inline void write_mesh(std::ostream& os, const Isosurface& iso) {
    os.precision(17);
    for (const auto& e : iso.elements) {
        for (int i = 0; i < e.n_vertices; ++i) {
            os << e.vertex[i].x << ' ' << e.vertex[i].y;
            if (iso.grid.dim == 3) os << ' ' << e.vertex[i].z;
            os << ' ';
        }
        os << e.measure << ' ' << e.unit_normal.x << ' ' << e.unit_normal.y;
        if (iso.grid.dim == 3) os << ' ' << e.unit_normal.z;
        os << '\n';
    }
}

} // namespace qstrip
