#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "qstrip/errors.hpp"
#include "qstrip/grid.hpp"

namespace qstrip {

/// Point in the periodic box. z is unused (0) when dim == 2.
struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    double norm() const { return std::sqrt(dot(*this)); }
    Vec3 cross(const Vec3& o) const {
        return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
    }
};

/// Grid-sampled real scalar field, stored in physical space.
/// The spectral representation is a transform applied on demand, not a
/// stored duplicate. Treat instances as immutable once built; read-only
/// concurrent use is safe.
class ScalarField {
public:
    ScalarField() = default;
    explicit ScalarField(const Grid& g, double fill = 0.0)
        : grid_(g), v_(g.size(), fill) {}
    ScalarField(const Grid& g, std::vector<double> values)
        : grid_(g), v_(std::move(values)) {
        if (v_.size() != grid_.size())
            throw ConfigError("ScalarField: sample count does not match grid");
    }

    const Grid& grid() const { return grid_; }
    const std::vector<double>& values() const { return v_; }
    std::vector<double>& values() { return v_; }
    std::size_t size() const { return v_.size(); }

    double operator[](std::size_t i) const { return v_[i]; }
    double& operator[](std::size_t i) { return v_[i]; }

    double at(int i, int j) const { return v_[grid_.index(grid_.wrap(i), grid_.wrap(j))]; }
    double at(int i, int j, int k) const {
        return v_[grid_.index(grid_.wrap(i), grid_.wrap(j), grid_.wrap(k))];
    }

    double mean() const {
        double s = 0.0;
        for (double x : v_) s += x;
        return s / static_cast<double>(v_.size());
    }

    double max_abs() const {
        double m = 0.0;
        for (double x : v_) m = std::max(m, std::abs(x));
        return m;
    }

    double min() const { return *std::min_element(v_.begin(), v_.end()); }
    double max() const { return *std::max_element(v_.begin(), v_.end()); }

    bool is_finite() const {
        for (double x : v_)
            if (!std::isfinite(x)) return false;
        return true;
    }

    /// Integral over the torus (sum of samples times cell volume).
    double integral() const { return mean() * std::pow(two_pi, grid_.dim); }

private:
    Grid grid_;
    std::vector<double> v_;
};

/// Velocity-like field: dim scalar components plus a divergence-free flag
/// set by the projection and the solenoidal initializers.
class VectorField {
public:
    VectorField() = default;
    explicit VectorField(const Grid& g)
        : grid_(g), comp_(g.dim, ScalarField(g)) {}
    VectorField(const Grid& g, std::vector<ScalarField> comps, bool div_free = false)
        : grid_(g), comp_(std::move(comps)), divergence_free_(div_free) {
        if (static_cast<int>(comp_.size()) != g.dim)
            throw ConfigError("VectorField: component count does not match dim");
        for (const auto& c : comp_)
            if (c.grid() != g) throw GridMismatch("VectorField: component grid mismatch");
    }

    const Grid& grid() const { return grid_; }
    int dim() const { return grid_.dim; }
    const ScalarField& comp(int d) const { return comp_[d]; }
    ScalarField& comp(int d) { return comp_[d]; }

    bool divergence_free() const { return divergence_free_; }
    void set_divergence_free(bool b) { divergence_free_ = b; }

    /// Pointwise Euclidean magnitude maximum.
    double max_norm() const {
        double m = 0.0;
        for (std::size_t i = 0; i < grid_.size(); ++i) {
            double s = 0.0;
            for (int d = 0; d < grid_.dim; ++d) s += comp_[d][i] * comp_[d][i];
            m = std::max(m, s);
        }
        return std::sqrt(m);
    }

    double max_abs() const {
        double m = 0.0;
        for (const auto& c : comp_) m = std::max(m, c.max_abs());
        return m;
    }

    bool is_finite() const {
        for (const auto& c : comp_)
            if (!c.is_finite()) return false;
        return true;
    }

private:
    Grid grid_;
    std::vector<ScalarField> comp_;
    bool divergence_free_ = false;
};

// ---- elementwise helpers ----------------------------------------------

inline ScalarField operator+(const ScalarField& a, const ScalarField& b) {
    if (a.grid() != b.grid()) throw GridMismatch("ScalarField +: grid mismatch");
    ScalarField r(a.grid());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
    return r;
}

inline ScalarField operator-(const ScalarField& a, const ScalarField& b) {
    if (a.grid() != b.grid()) throw GridMismatch("ScalarField -: grid mismatch");
    ScalarField r(a.grid());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
    return r;
}

inline ScalarField operator*(double s, const ScalarField& a) {
    ScalarField r(a.grid());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = s * a[i];
    return r;
}

/// Pointwise product of physical samples.
inline ScalarField pointwise(const ScalarField& a, const ScalarField& b) {
    if (a.grid() != b.grid()) throw GridMismatch("pointwise: grid mismatch");
    ScalarField r(a.grid());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] * b[i];
    return r;
}

inline VectorField operator+(const VectorField& a, const VectorField& b) {
    if (a.grid() != b.grid()) throw GridMismatch("VectorField +: grid mismatch");
    std::vector<ScalarField> comps;
    comps.reserve(a.dim());
    for (int d = 0; d < a.dim(); ++d) comps.push_back(a.comp(d) + b.comp(d));
    return VectorField(a.grid(), std::move(comps));
}

inline VectorField operator-(const VectorField& a, const VectorField& b) {
    if (a.grid() != b.grid()) throw GridMismatch("VectorField -: grid mismatch");
    std::vector<ScalarField> comps;
    comps.reserve(a.dim());
    for (int d = 0; d < a.dim(); ++d) comps.push_back(a.comp(d) - b.comp(d));
    return VectorField(a.grid(), std::move(comps));
}

inline VectorField operator*(double s, const VectorField& a) {
    std::vector<ScalarField> comps;
    comps.reserve(a.dim());
    for (int d = 0; d < a.dim(); ++d) comps.push_back(s * a.comp(d));
    return VectorField(a.grid(), std::move(comps));
}

/// Pointwise dot product of two vector fields.
inline ScalarField dot(const VectorField& a, const VectorField& b) {
    if (a.grid() != b.grid()) throw GridMismatch("dot: grid mismatch");
    ScalarField r(a.grid());
    for (int d = 0; d < a.dim(); ++d)
        for (std::size_t i = 0; i < r.size(); ++i) r[i] += a.comp(d)[i] * b.comp(d)[i];
    return r;
}

// ---- multilinear interpolation ----------------------------------------

namespace detail {

struct AxisWeight {
    int i0, i1;
    double t;
};

inline AxisWeight axis_weight(const Grid& g, double coord) {
    double u = coord / g.spacing();
    double fl = std::floor(u);
    int i0 = g.wrap(static_cast<int>(fl));
    return {i0, g.wrap(i0 + 1), u - fl};
}

} // namespace detail

/// Periodic multilinear interpolation at an arbitrary point (coordinates
/// need not lie in [0, 2pi); they are wrapped).
inline double interpolate(const ScalarField& f, const Vec3& p) {
    const Grid& g = f.grid();
    auto wx = detail::axis_weight(g, p.x);
    auto wy = detail::axis_weight(g, p.y);
    if (g.dim == 2) {
        double v00 = f.values()[g.index(wx.i0, wy.i0)];
        double v10 = f.values()[g.index(wx.i1, wy.i0)];
        double v01 = f.values()[g.index(wx.i0, wy.i1)];
        double v11 = f.values()[g.index(wx.i1, wy.i1)];
        double a = v00 + wx.t * (v10 - v00);
        double b = v01 + wx.t * (v11 - v01);
        return a + wy.t * (b - a);
    }
    auto wz = detail::axis_weight(g, p.z);
    double acc = 0.0;
    const double tx[2] = {1.0 - wx.t, wx.t};
    const double ty[2] = {1.0 - wy.t, wy.t};
    const double tz[2] = {1.0 - wz.t, wz.t};
    const int ix[2] = {wx.i0, wx.i1};
    const int iy[2] = {wy.i0, wy.i1};
    const int iz[2] = {wz.i0, wz.i1};
    for (int c = 0; c < 2; ++c)
        for (int b = 0; b < 2; ++b)
            for (int a = 0; a < 2; ++a)
                acc += tx[a] * ty[b] * tz[c] * f.values()[g.index(ix[a], iy[b], iz[c])];
    return acc;
}

inline Vec3 interpolate(const VectorField& u, const Vec3& p) {
    Vec3 r;
    r.x = interpolate(u.comp(0), p);
    r.y = interpolate(u.comp(1), p);
    if (u.dim() == 3) r.z = interpolate(u.comp(2), p);
    return r;
}

} // namespace qstrip
