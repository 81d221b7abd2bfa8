#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>

#include "qstrip/errors.hpp"

namespace qstrip {

inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// Uniform periodic grid on [0, 2pi)^dim with the same resolution per axis.
/// Sample i along an axis sits at x = 2pi * i / n.
struct Grid {
    int dim = 2;
    int n = 0;

    Grid() = default;
    Grid(int dim_, int n_) : dim(dim_), n(n_) {
        if (dim != 2 && dim != 3)
            throw ConfigError("Grid: dim must be 2 or 3, got " + std::to_string(dim));
        if (n < 8 || n % 2 != 0)
            throw ConfigError("Grid: n must be even and >= 8, got " + std::to_string(n));
    }

    double period() const { return two_pi; }
    double spacing() const { return two_pi / n; }
    double cell_volume() const { return std::pow(spacing(), dim); }

    std::size_t size() const {
        std::size_t s = 1;
        for (int d = 0; d < dim; ++d) s *= static_cast<std::size_t>(n);
        return s;
    }

    /// Wrap an integer index onto [0, n).
    int wrap(int i) const {
        int r = i % n;
        return r < 0 ? r + n : r;
    }

    // x fastest, then y, then z.
    std::size_t index(int i, int j) const {
        return static_cast<std::size_t>(j) * n + i;
    }
    std::size_t index(int i, int j, int k) const {
        return (static_cast<std::size_t>(k) * n + j) * n + i;
    }

    bool operator==(const Grid& o) const { return dim == o.dim && n == o.n; }
    bool operator!=(const Grid& o) const { return !(*this == o); }
};

} // namespace qstrip
