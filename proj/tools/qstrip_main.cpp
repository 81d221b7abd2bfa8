// Command-line driver: simulate flows, verify the energy balances, sweep
// Bernoulli levels into ledger tables, and run convergence studies.
// Exit codes: 0 success, 1 verification failure, 2 usage/setup error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qstrip/qstrip.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace qstrip;

namespace {

struct CliOptions {
    std::string config_path;
    std::string snapshot_path;
    std::string output_dir;
    bool quiet = false;
};

struct BuiltState {
    FlowState state;
    std::string condition;
    std::uint64_t seed = 0;
};

BuiltState build_state(const ExperimentConfig& cfg) {
    Grid g(cfg.dim, cfg.resolution);
    BuiltState bs;
    bs.condition = cfg.initial_condition;
    bs.seed = cfg.seed;
    if (cfg.initial_condition == "taylor-green") {
        if (cfg.dim != 2) throw ConfigError("taylor-green initial condition is 2D");
        bs.state = init_taylor_green_2d(g, cfg.nu);
    } else if (cfg.initial_condition == "abc") {
        if (cfg.dim != 3) throw ConfigError("abc initial condition is 3D");
        bs.state = init_abc_3d(g, cfg.abc_a, cfg.abc_b, cfg.abc_c, cfg.nu);
    } else {
        bs.state = init_random_solenoidal(g, cfg.seed, cfg.peak_wavenumber,
                                          cfg.amplitude, cfg.nu);
    }
    return bs;
}

std::vector<double> resolve_levels(const ExperimentConfig& cfg, const ScalarField& Q) {
    std::vector<double> out;
    out.reserve(cfg.levels.size());
    for (double l : cfg.levels)
        out.push_back(cfg.levels_are_quantiles ? quantile(Q, l) : l);
    return out;
}

json config_echo(const ExperimentConfig& cfg) {
    json j;
    j["dim"] = cfg.dim;
    j["resolution"] = cfg.resolution;
    if (!cfg.resolutions.empty()) j["resolutions"] = cfg.resolutions;
    j["nu"] = cfg.nu;
    j["dt"] = cfg.dt;
    j["n_steps"] = cfg.n_steps;
    j["snapshot_times"] = cfg.snapshot_times;
    j["initial_condition"] = cfg.initial_condition;
    j["seed"] = cfg.seed;
    j["peak_wavenumber"] = cfg.peak_wavenumber;
    j["amplitude"] = cfg.amplitude;
    j["levels"] = cfg.levels;
    j["levels_are_quantiles"] = cfg.levels_are_quantiles;
    j["tolerances"] = {{"divergence_free", cfg.tol.divergence_free},
                       {"pointwise_balance", cfg.tol.pointwise_balance},
                       {"global_balance", cfg.tol.global_balance},
                       {"strip_relative_residual", cfg.tol.strip_relative_residual},
                       {"sign_fraction", cfg.tol.sign_fraction},
                       {"flux_fraction", cfg.tol.flux_fraction},
                       {"coarea_fraction", cfg.tol.coarea_fraction}};
    return j;
}

ExperimentConfig load_config(const CliOptions& opt) {
    if (opt.config_path.empty()) throw ConfigError("missing --config");
    ExperimentConfig cfg = ExperimentConfig::from_file(ConfigFile::parse_file(opt.config_path));
    if (!opt.output_dir.empty()) cfg.output_dir = opt.output_dir;
    return cfg;
}

// ---- simulate -------------------------------------------------------------

int cmd_simulate(const CliOptions& opt) {
    ExperimentConfig cfg = load_config(opt);
    BuiltState bs = build_state(cfg);

    // fail before creating any output
    double cfl = cfg.dt * bs.state.v.max_norm() / bs.state.v.grid().spacing();
    if (cfl > cfl_limit)
        throw CFLViolation("simulate: initial CFL number " + std::to_string(cfl) +
                           " exceeds " + std::to_string(cfl_limit));

    fs::create_directories(cfg.output_dir);
    std::ofstream energy(fs::path(cfg.output_dir) / "energy.csv");
    energy.precision(17);
    energy << "t,kinetic_energy,enstrophy,max_speed\n";

    auto log_energy = [&](const FlowState& s) {
        energy << s.t << ',' << kinetic_energy(s.v) << ','
               << vorticity_norm_sq(s.v).integral() << ',' << s.v.max_norm() << '\n';
    };

    std::vector<double> want = cfg.snapshot_times;
    std::sort(want.begin(), want.end());
    std::size_t next_snap = 0;
    int snap_index = 0;
    auto maybe_snapshot = [&](const FlowState& s) {
        while (next_snap < want.size() && s.t >= want[next_snap] - 0.5 * cfg.dt) {
            char name[64];
            std::snprintf(name, sizeof(name), "snapshot_%04d.bin", snap_index++);
            write_snapshot((fs::path(cfg.output_dir) / name).string(), s, bs.condition,
                           bs.seed);
            ++next_snap;
        }
    };

    FlowState s = std::move(bs.state);
    log_energy(s);
    maybe_snapshot(s);
    for (int step = 0; step < cfg.n_steps; ++step) {
        s = step_rk4(s, cfg.dt);
        log_energy(s);
        maybe_snapshot(s);
    }
    if (want.empty())
        write_snapshot((fs::path(cfg.output_dir) / "snapshot_final.bin").string(), s,
                       bs.condition, bs.seed);

    json run;
    run["config"] = config_echo(cfg);
    run["final_time"] = s.t;
    run["final_kinetic_energy"] = kinetic_energy(s.v);
    std::ofstream(fs::path(cfg.output_dir) / "run.json") << run.dump(2) << '\n';
    if (!opt.quiet)
        std::cout << "simulate: " << cfg.n_steps << " steps to t = " << s.t << ", output in "
                  << cfg.output_dir << "\n";
    return 0;
}

// ---- verify ---------------------------------------------------------------

struct Check {
    std::string name;
    double measured = 0.0;
    double threshold = 0.0;
    bool pass = false;
    std::string note;
};

int cmd_verify(const CliOptions& opt) {
    ExperimentConfig cfg;
    FlowState state;
    std::string condition = "snapshot";
    if (!opt.snapshot_path.empty()) {
        if (!opt.config_path.empty()) cfg = load_config(opt);
        else if (!opt.output_dir.empty()) cfg.output_dir = opt.output_dir;
        Snapshot snap = read_snapshot(opt.snapshot_path);
        state = std::move(snap.state);
        condition = snap.header.condition;
    } else {
        cfg = load_config(opt);
        BuiltState bs = build_state(cfg);
        state = std::move(bs.state);
        condition = bs.condition;
    }

    std::vector<Check> checks;
    auto record = [&](Check c) {
        checks.push_back(c);
        if (!opt.quiet) {
            std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << ": measured "
                      << c.measured << " vs threshold " << c.threshold;
            if (!c.note.empty()) std::cout << " (" << c.note << ")";
            std::cout << "\n";
        }
    };

    double div_err = divergence_error(state.v);
    record({"divergence_free", div_err, cfg.tol.divergence_free,
            div_err <= cfg.tol.divergence_free, ""});

    SpectralDiagnostics diag = diagnose(state.v);
    record({"well_resolved", diag.high_mode_energy_fraction,
            SpectralDiagnostics::resolved_threshold, diag.well_resolved, ""});

    bool upstream_ok = checks[0].pass && checks[1].pass;
    if (upstream_ok) {
        state.v.set_divergence_free(true);
        BernoulliBundle b = compute_bundle(state);

        ScalarField res = pointwise_balance_residual(b, state);
        double scale = pointwise_balance_scale(b, state);
        double rel = scale > 0.0 ? res.max_abs() / scale : 0.0;
        record({"pointwise_balance", rel, cfg.tol.pointwise_balance,
                rel <= cfg.tol.pointwise_balance, ""});

        double dissipation = state.nu * b.enstrophy_density.integral();
        double total = b.dt_kin.integral() + dissipation;
        double denom = dissipation;
        if (state.nu == 0.0) {
            for (std::size_t s = 0; s < b.dt_kin.size(); ++s)
                denom += std::abs(b.dt_kin[s]);
            denom *= b.dt_kin.grid().cell_volume();
        }
        denom = std::max(denom, residual_floor);
        record({"global_balance", std::abs(total) / denom, cfg.tol.global_balance,
                std::abs(total) / denom <= cfg.tol.global_balance, ""});

        std::vector<double> levels = resolve_levels(cfg, b.Q);
        if (degenerate_q_range(b.q_min, b.q_max)) levels.clear();
        StateMetadata meta;
        meta.initial_condition = condition;
        meta.seed = cfg.seed;
        LedgerTable table = sweep_levels(b, state, levels, meta);

        double worst = 0.0;
        int regular_strips = 0;
        bool orientation_ok = true;
        for (const auto& e : table.entries) {
            if (e.full_range()) continue;
            bool guarded =
                (e.alpha_regularity.is_regular || e.alpha_regularity.degenerate) &&
                (e.beta_regularity.is_regular || e.beta_regularity.degenerate);
            if (!guarded) continue;
            ++regular_strips;
            worst = std::max(worst, e.relative_residual);
            if (state.nu > 0.0 && !e.full_range() &&
                std::abs(e.residual) > std::abs(e.residual_opposite))
                orientation_ok = false;
        }
        record({"strip_balance", worst, cfg.tol.strip_relative_residual,
                worst <= cfg.tol.strip_relative_residual,
                std::to_string(regular_strips) + " strips past regularity guard"});
        record({"flux_orientation", orientation_ok ? 0.0 : 1.0, 0.5, orientation_ok,
                "residual smaller with volume = beta_flux - alpha_flux"});

        auto signs = verify_sign_constraints(b, state, levels);
        double sign_worst = 0.0;
        bool sign_ok = true;
        for (const auto& sc : signs) {
            if (!sc.sign_ok) sign_ok = false;
            double excess = std::max(sc.upper_volume, -sc.lower_volume);
            sign_worst = std::max(sign_worst, excess / std::max(sc.tolerance, residual_floor));
        }
        record({"sign_constraints", sign_worst, 1.0, sign_ok, ""});

        double flux_worst = 0.0;
        for (double c : levels) {
            if (c <= b.q_min || c >= b.q_max) continue;
            Isosurface iso = extract_isosurface(b.Q, c);
            if (iso.empty()) continue;
            double sp = speed_integral(state.v, iso);
            if (sp <= 0.0) continue;
            flux_worst = std::max(flux_worst, std::abs(flux_integral(state.v, iso)) / sp);
        }
        record({"zero_flux", flux_worst, cfg.tol.flux_fraction,
                flux_worst <= cfg.tol.flux_fraction, ""});

        if (!levels.empty()) {
            double c = levels[levels.size() / 2];
            auto est = coarea_flux_estimate(b.Q, b.grad_norm, c);
            if (est.applicable) {
                double direct = surface_integral(extract_isosurface(b.Q, c), b.grad_norm);
                double rel_diff = direct > 0.0 ? std::abs(est.value - direct) / direct : 0.0;
                record({"coarea_consistency", rel_diff, cfg.tol.coarea_fraction,
                        rel_diff <= cfg.tol.coarea_fraction, ""});
            } else {
                record({"coarea_consistency", 0.0, cfg.tol.coarea_fraction, true,
                        "skipped: grid too coarse for the sharp-mask estimate here"});
            }
        }
    }

    bool all_pass = true;
    json jchecks = json::array();
    for (const auto& c : checks) {
        all_pass = all_pass && c.pass;
        json jc = {{"check", c.name},
                   {"measured", c.measured},
                   {"threshold", c.threshold},
                   {"pass", c.pass}};
        if (!c.note.empty()) jc["note"] = c.note;
        jchecks.push_back(jc);
    }
    json report;
    report["checks"] = jchecks;
    report["pass"] = all_pass;
    report["condition"] = condition;
    if (!opt.config_path.empty()) report["config"] = config_echo(cfg);

    if (!cfg.output_dir.empty()) {
        fs::create_directories(cfg.output_dir);
        std::ofstream(fs::path(cfg.output_dir) / "verify.json") << report.dump(2) << '\n';
    }
    if (!opt.quiet) std::cout << (all_pass ? "verify: all checks passed\n"
                                           : "verify: FAILURES present\n");
    return all_pass ? 0 : 1;
}

// ---- sweep ----------------------------------------------------------------

int cmd_sweep(const CliOptions& opt) {
    ExperimentConfig cfg;
    std::vector<std::pair<FlowState, std::string>> states;
    std::string condition;
    std::uint64_t seed = 0;

    if (!opt.snapshot_path.empty()) {
        if (!opt.config_path.empty()) cfg = load_config(opt);
        else if (!opt.output_dir.empty()) cfg.output_dir = opt.output_dir;
        Snapshot snap = read_snapshot(opt.snapshot_path);
        condition = snap.header.condition;
        seed = snap.header.seed;
        states.emplace_back(std::move(snap.state), "snapshot");
    } else {
        cfg = load_config(opt);
        BuiltState bs = build_state(cfg);
        condition = bs.condition;
        seed = bs.seed;
        if (cfg.n_steps > 0 && !cfg.snapshot_times.empty()) {
            std::vector<double> want = cfg.snapshot_times;
            std::sort(want.begin(), want.end());
            std::size_t next = 0;
            FlowState s = std::move(bs.state);
            int idx = 0;
            auto grab = [&](const FlowState& st) {
                while (next < want.size() && st.t >= want[next] - 0.5 * cfg.dt) {
                    char tag[32];
                    std::snprintf(tag, sizeof(tag), "t%04d", idx++);
                    states.emplace_back(st, tag);
                    ++next;
                }
            };
            grab(s);
            for (int step = 0; step < cfg.n_steps && next < want.size(); ++step) {
                s = step_rk4(s, cfg.dt);
                grab(s);
            }
        } else {
            states.emplace_back(std::move(bs.state), "t0000");
        }
    }

    fs::create_directories(cfg.output_dir);
    for (const auto& [state, tag] : states) {
        BernoulliBundle b = compute_bundle(state);
        std::vector<double> levels = resolve_levels(cfg, b.Q);
        StateMetadata meta;
        meta.initial_condition = condition;
        meta.seed = seed;
        LedgerTable table = sweep_levels(b, state, levels, meta);
        auto csv_path = fs::path(cfg.output_dir) / ("ledger_" + tag + ".csv");
        std::ofstream csv(csv_path);
        write_csv(csv, table);
        std::ofstream(fs::path(cfg.output_dir) / ("ledger_" + tag + ".json"))
            << to_json(table).dump(2) << '\n';
        if (cfg.write_mesh) {
            int li = 0;
            for (double c : levels) {
                char name[64];
                std::snprintf(name, sizeof(name), "mesh_%s_level%02d.txt", tag.c_str(), li++);
                std::ofstream mesh(fs::path(cfg.output_dir) / name);
                write_mesh(mesh, extract_isosurface(b.Q, c));
            }
        }
        if (!opt.quiet)
            std::cout << "sweep: " << table.entries.size() << " entries -> " << csv_path
                      << "\n";
    }
    return 0;
}

// ---- converge ---------------------------------------------------------------

int cmd_converge(const CliOptions& opt) {
    ExperimentConfig cfg = load_config(opt);
    if (cfg.resolutions.size() < 3)
        throw ConfigError("converge: need at least three resolutions, each double the last");
    if (!cfg.levels_are_quantiles)
        throw ConfigError("converge: levels must be quantiles for convergence studies");

    auto ic = [&cfg](const Grid& g) {
        ExperimentConfig local = cfg;
        local.resolution = g.n;
        BuiltState bs = build_state(local);
        return bs.state;
    };
    ConvergenceReport rep = convergence_study(ic, cfg.dim, cfg.levels, cfg.resolutions);

    json j = to_json(rep);
    j["config"] = config_echo(cfg);
    fs::create_directories(cfg.output_dir);
    std::ofstream(fs::path(cfg.output_dir) / "converge.json") << j.dump(2) << '\n';
    if (!opt.quiet) {
        std::cout << "converge: overall order " << rep.overall_order << "\n";
        for (const auto& s : rep.strips) {
            std::cout << "  strip [" << s.quantile_lo << ", " << s.quantile_hi << "]: ";
            if (s.excluded_by_guard)
                std::cout << "excluded by regularity guard\n";
            else if (s.exact)
                std::cout << "exact\n";
            else
                std::cout << "order " << s.fitted_order << "\n";
        }
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Strip-wise energy accounting for incompressible flow on the torus"};
    app.require_subcommand(1);

    CliOptions opt;
    auto add_common = [&opt](CLI::App* sub) {
        sub->add_option("--config", opt.config_path, "Path to the experiment config file");
        sub->add_option("--snapshot", opt.snapshot_path, "Path to a velocity snapshot");
        sub->add_option("--output", opt.output_dir, "Output directory (overrides config)");
        sub->add_flag("--quiet", opt.quiet, "Suppress progress output");
        return sub;
    };
    auto* sim = add_common(app.add_subcommand("simulate", "Integrate a flow and store snapshots"));
    auto* ver = add_common(app.add_subcommand("verify", "Run the energy-balance verification suite"));
    auto* swp = add_common(app.add_subcommand("sweep", "Sweep Bernoulli levels into a ledger CSV"));
    auto* cvg = add_common(app.add_subcommand("converge", "Grid-refinement study of the strip balance"));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        if (sim->parsed()) return cmd_simulate(opt);
        if (ver->parsed()) return cmd_verify(opt);
        if (swp->parsed()) return cmd_sweep(opt);
        if (cvg->parsed()) return cmd_converge(opt);
    } catch (const CFLViolation& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
