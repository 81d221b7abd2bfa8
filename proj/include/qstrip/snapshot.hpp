#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

#include <json.hpp>

#include "qstrip/flow.hpp"
#include "qstrip/spectral.hpp"

namespace qstrip {

static_assert(std::endian::native == std::endian::little,
              "snapshot format is little-endian; big-endian hosts need byte swaps");

/// Snapshot file: one line of JSON metadata terminated by '\n', followed
/// by the raw velocity samples as little-endian 64-bit reals, one
/// component after another, x index fastest.
struct SnapshotHeader {
    int dim = 2;
    int n = 0;
    double nu = 0.0;
    double t = 0.0;
    std::uint64_t seed = 0;
    std::string condition;
};

inline void write_snapshot(const std::string& path, const FlowState& state,
                           const std::string& condition, std::uint64_t seed) {
    nlohmann::json j;
    j["dim"] = state.v.grid().dim;
    j["n"] = state.v.grid().n;
    j["nu"] = state.nu;
    j["t"] = state.t;
    j["seed"] = seed;
    j["condition"] = condition;
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ConfigError("write_snapshot: cannot open " + path);
    os << j.dump() << '\n';
    for (int d = 0; d < state.v.dim(); ++d) {
        const auto& vals = state.v.comp(d).values();
        os.write(reinterpret_cast<const char*>(vals.data()),
                 static_cast<std::streamsize>(vals.size() * sizeof(double)));
    }
    if (!os) throw ConfigError("write_snapshot: write failed for " + path);
}

struct Snapshot {
    SnapshotHeader header;
    FlowState state;
};

/// Load a snapshot. The divergence-free flag is set only if the loaded
/// field actually passes the spectral divergence check, so corrupted or
/// hand-edited snapshots are detectable downstream.
inline Snapshot read_snapshot(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ConfigError("read_snapshot: cannot open " + path);
    std::string line;
    if (!std::getline(is, line)) throw ConfigError("read_snapshot: missing header");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(line);
    } catch (const std::exception& e) {
        throw ConfigError(std::string("read_snapshot: bad header: ") + e.what());
    }
    SnapshotHeader h;
    h.dim = j.at("dim").get<int>();
    h.n = j.at("n").get<int>();
    h.nu = j.at("nu").get<double>();
    h.t = j.at("t").get<double>();
    h.seed = j.value("seed", std::uint64_t{0});
    h.condition = j.value("condition", std::string{});

    Grid g(h.dim, h.n);
    std::vector<ScalarField> comps;
    comps.reserve(g.dim);
    for (int d = 0; d < g.dim; ++d) {
        std::vector<double> vals(g.size());
        is.read(reinterpret_cast<char*>(vals.data()),
                static_cast<std::streamsize>(vals.size() * sizeof(double)));
        if (!is) throw ConfigError("read_snapshot: truncated data in " + path);
        comps.emplace_back(g, std::move(vals));
    }
    VectorField v(g, std::move(comps));
    if (!v.is_finite()) throw ConfigError("read_snapshot: non-finite samples in " + path);
    v.set_divergence_free(divergence_error(v) <= 1e-10);

    Snapshot s;
    s.header = h;
    s.state = FlowState{std::move(v), h.nu, h.t};
    return s;
}

} // namespace qstrip
