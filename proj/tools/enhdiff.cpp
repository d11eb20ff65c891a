/*
   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

// enhdiff command-line driver: run, sweep, validate.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "enhdiff.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace enhdiff;

namespace {

enum ExitCode : int { kOk = 0, kCheckFailure = 1, kConfigError = 2, kInsufficientData = 3 };

struct Globals {
    std::optional<fs::path> output_dir;
    std::optional<std::uint64_t> seed;
    unsigned threads = 0;
    bool wrong_noise = false;  // test hook: 2 kappa instead of sqrt(2 kappa)
};

std::string num(double v) { return io::format_double(v); }

struct Context {
    RunConfig cfg;
    fs::path out;
};

Context prepare(const fs::path& path, ConfigMode mode, const Globals& g) {
    Context c{load_config(path, mode), {}};
    if (g.seed) c.cfg.spec.seed = *g.seed;
    c.cfg.spec.threads = resolve_threads(g.threads);
    if (g.wrong_noise) c.cfg.spec.noise = NoiseConvention::TwoKappa;
    c.out = g.output_dir ? *g.output_dir : c.cfg.output.directory;
    if (c.out.is_relative() && !g.output_dir) c.out = path.parent_path() / c.out;
    fs::create_directories(c.out);
    return c;
}

void write_json(const json& j, const fs::path& p) {
    std::ofstream os(p);
    if (!os) throw Error("cannot open " + p.string() + " for writing");
    os << j.dump(2) << '\n';
}

json describe(const RunConfig& cfg) {
    const auto& s = cfg.spec;
    json j;
    j["flow"] = flow_name(s.flow);
    j["diffusivity"] = s.anisotropic ? "anisotropic_radial" : "isotropic";
    if (s.anisotropic) j["gamma"] = s.gamma;
    j["initial_data"] = initial_kind_name(s.initial);
    j["backend"] = s.backend == Backend::Grid ? "grid" : "monte_carlo";
    j["seed"] = s.seed;
    return j;
}

io::Table field_table(const CartesianField& f) {
    io::Table t{{"x", "y", "value"}, {}};
    for (std::size_t j = 0; j < f.grid.ny; ++j)
        for (std::size_t i = 0; i < f.grid.nx; ++i)
            t.add_row({num(f.grid.x(i)), num(f.grid.y(j)), num(f(i, j))});
    return t;
}

io::Table field_table(const PolarField& f) {
    io::Table t{{"r", "theta", "value"}, {}};
    for (std::size_t i = 0; i < f.grid.nr; ++i)
        for (std::size_t j = 0; j < f.grid.ntheta; ++j)
            t.add_row({num(f.grid.r(i)), num(f.grid.theta(j)), num(f(i, j))});
    return t;
}

// ---------------------------------------------------------------------------
// run
// ---------------------------------------------------------------------------

int run_grid(const Context& c, json& summary) {
    const RunConfig& cfg = c.cfg;
    GridSimulation sim(cfg.spec, *cfg.kappa);
    if (cfg.restart) {
        if (sim.is_polar())
            sim.restart_from(io::read_polar_snapshot(*cfg.restart));
        else
            sim.restart_from(io::read_cartesian_snapshot(*cfg.restart));
    }
    const bool bin = cfg.output.wants("bin");
    const bool csv = cfg.output.wants("csv");
    auto snapshot = [&](const fs::path& p) {
        if (sim.is_polar())
            io::write_snapshot(sim.polar_field(), p);
        else
            io::write_snapshot(sim.cartesian_field(), p);
    };

    EnergyLedger ledger;
    sim.update_ledger(ledger);
    const double start_norm = std::sqrt(ledger.norm_sq.front());
    // The horizon is a run length, so a restarted run continues the clock.
    const double t_end = sim.time() + sim.horizon();
    std::size_t steps = 0;
    std::string failure;
    try {
        while (sim.time() < t_end - 1e-12 * sim.horizon()) {
            sim.step(std::min(sim.dt(), t_end - sim.time()));
            sim.update_ledger(ledger);
            ++steps;
            if (!std::isfinite(ledger.norm_sq.back())) throw Error("solver produced a non-finite field");
            if (bin && cfg.output.snapshot_every && steps % cfg.output.snapshot_every == 0) {
                char name[32];
                std::snprintf(name, sizeof name, "snapshot_%06zu.bin", steps);
                snapshot(c.out / name);
            }
        }
    } catch (const Error& e) {
        failure = e.what();
    }

    if (csv) {
        io::Table t{{"t", "norm_sq", "dissipation_rate", "dissipation", "residual"}, {}};
        for (std::size_t k = 0; k < ledger.time.size(); ++k)
            t.add_row({num(ledger.time[k]), num(ledger.norm_sq[k]), num(ledger.dissipation_rate[k]),
                       num(ledger.dissipation[k]), num(ledger.residual[k])});
        io::write_csv(t, c.out / "ledger.csv");
        if (sim.is_polar())
            io::write_csv(field_table(sim.polar_field()), c.out / "field_final.csv");
        else
            io::write_csv(field_table(sim.cartesian_field()), c.out / "field_final.csv");
    }
    if (bin) snapshot(c.out / "field_final.bin");

    if (cfg.interface_file) {
        if (sim.is_polar()) throw ConfigError("interfaces are supported on Cartesian grids only");
        const Interface iface = io::load_interface_csv(*cfg.interface_file);
        const auto& f = sim.cartesian_field();
        const RegularizedDelta d = delta_for_grid(f.grid, cfg.epsilon_cells);
        const auto values = interface_sample(f, iface, d);
        io::Table t{{"x", "y", "dS", "value"}, {}};
        for (std::size_t k = 0; k < iface.size(); ++k)
            t.add_row({num(iface.markers[k].x), num(iface.markers[k].y), num(iface.weights[k]), num(values[k])});
        io::write_csv(t, c.out / "interface_samples.csv");
    }

    double max_residual = 0.0;
    for (double r : ledger.residual) max_residual = std::max(max_residual, std::abs(r));
    summary["dt"] = sim.dt();
    summary["horizon"] = sim.horizon();
    summary["steps"] = steps;
    summary["final_time"] = sim.time();
    summary["initial_norm"] = start_norm;
    summary["final_norm"] = std::sqrt(ledger.norm_sq.back());
    summary["norm_ratio"] = std::sqrt(ledger.norm_sq.back()) / start_norm;
    summary["max_relative_residual"] = max_residual / ledger.norm_sq.front();
    if (!failure.empty()) {
        summary["status"] = "failed";
        summary["partial_artifacts"] = true;
        summary["error"] = failure;
        std::cerr << "error: " << failure << '\n';
        return kCheckFailure;
    }
    return kOk;
}

int run_monte_carlo(const Context& c, json& summary) {
    const RunConfig& cfg = c.cfg;
    const ExperimentSpec& spec = cfg.spec;
    if (cfg.restart) throw ConfigError("initial_data.restart is only supported by the grid backend");
    const InitialData init = build_initial_data(spec.initial, spec.flow, *cfg.kappa, spec.beta);
    const TimeGrid tg = resolve_time_grid(spec, init);
    const DiffusivityModel diff = spec.diffusivity(*cfg.kappa);
    const Quadrature domain = monte_carlo_domain(spec, init);
    SdeConfig sde;
    sde.dt = tg.dt;
    sde.t_final = tg.horizon;
    sde.noise = spec.noise;

    std::vector<PointEstimate> probes;
    for (std::size_t i = 0; i < domain.size(); ++i) {
        const auto ens = feynman_kac_ensemble(spec.flow, diff, domain.nodes[i], sde, mix_seed(spec.seed, i),
                                           spec.res.mc_samples, spec.threads);
        probes.push_back(estimate_density(init, ens));
    }
    const IntegratedVariance iv = integrated_variance(init, spec.flow, diff, domain, sde, spec.res.mc_samples,
                                                      mix_seed(spec.seed, 0xC0FFEEull), spec.threads);
    double half_norm0 = 0.0;
    for (std::size_t i = 0; i < domain.size(); ++i) half_norm0 += 0.5 * domain.weights[i] * std::pow(init(domain.nodes[i]), 2);

    if (cfg.output.wants("csv")) {
        io::Table t{{"x", "y", "weight", "estimate", "standard_error", "n"}, {}};
        for (std::size_t i = 0; i < domain.size(); ++i)
            t.add_row({num(domain.nodes[i].x), num(domain.nodes[i].y), num(domain.weights[i]), num(probes[i].mean),
                       num(probes[i].standard_error), std::to_string(probes[i].n_samples)});
        io::write_csv(t, c.out / "density.csv");
        io::Table v{{"t", "half_integrated_variance", "standard_error"}, {}};
        v.add_row({num(iv.time), num(iv.value), num(iv.standard_error)});
        io::write_csv(v, c.out / "variance.csv");
    }
    summary["dt"] = tg.dt;
    summary["horizon"] = tg.horizon;
    summary["samples_per_node"] = spec.res.mc_samples;
    summary["nodes"] = domain.size();
    summary["half_integrated_variance"] = iv.value;
    summary["half_integrated_variance_se"] = iv.standard_error;
    summary["norm_ratio"] = std::sqrt(std::max(0.0, 1.0 - iv.value / half_norm0));
    return kOk;
}

int cmd_run(const fs::path& path, const Globals& g) {
    const Context c = prepare(path, ConfigMode::Run, g);
    json summary;
    summary["command"] = "run";
    summary["config"] = describe(c.cfg);
    summary["kappa"] = *c.cfg.kappa;
    summary["status"] = "ok";
    const int rc = c.cfg.spec.backend == Backend::Grid ? run_grid(c, summary) : run_monte_carlo(c, summary);
    write_json(summary, c.out / "summary.json");
    std::cout << "run: norm ratio " << num(summary["norm_ratio"].get<double>()) << " -> " << c.out.string() << '\n';
    return rc;
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

void write_sweep_svg(const SweepResult& r, const ExperimentSpec& spec, const fs::path& p) {
    const bool corr = r.fit && r.fit->log_correction_applied;
    const double q = std::holds_alternative<flow::Circular>(spec.flow) ? std::get<flow::Circular>(spec.flow).q
                     : spec.synthetic && spec.synthetic->log_q          ? *spec.synthetic->log_q
                                                                        : 1.0;
    io::PlotSeries data{"measured T", {}, {}, false, "#1f77b4"};
    for (const auto& row : r.rows) {
        if (row.censored) continue;
        data.x.push_back(row.kappa);
        data.y.push_back(corr ? row.T / log_correction_factor(row.kappa, q) : row.T);
    }
    std::vector<io::PlotSeries> series{data};
    std::string title = "mixing time sweep";
    if (r.fit && !data.x.empty()) {
        const double k0 = data.x.front(), k1 = data.x.back();
        io::PlotSeries ols{"OLS fit", {k0, k1}, {}, true, "#d62728"};
        for (double k : ols.x) ols.y.push_back(std::exp(r.fit->intercept) * std::pow(k, r.fit->slope));
        // Reference slope anchored at the geometric centre of the data.
        double lx = 0.0, ly = 0.0;
        for (std::size_t i = 0; i < data.x.size(); ++i) lx += std::log(data.x[i]), ly += std::log(data.y[i]);
        lx /= static_cast<double>(data.x.size());
        ly /= static_cast<double>(data.x.size());
        io::PlotSeries pred{"predicted slope", {k0, k1}, {}, true, "#2ca02c"};
        for (double k : pred.x) pred.y.push_back(std::exp(ly + r.predicted_slope * (std::log(k) - lx)));
        series.push_back(ols);
        series.push_back(pred);
        char banner[160];
        std::snprintf(banner, sizeof banner, "slope %.4f vs predicted %.4f, |diff| = %.4f", r.fit->slope,
                      r.predicted_slope, std::abs(r.fit->slope - r.predicted_slope));
        title = banner;
    }
    std::ofstream os(p);
    os << io::loglog_svg(series, title, "kappa", corr ? "T / log correction" : "T");
}

int cmd_sweep(const fs::path& path, const Globals& g) {
    const Context c = prepare(path, ConfigMode::Sweep, g);
    const ExperimentSpec& spec = c.cfg.spec;
    SweepResult result;
    result.predicted_slope = spec.synthetic ? spec.synthetic->slope : predicted_slope(spec);
    std::string fit_error;
    try {
        result = sweep_and_fit(spec, &result.rows);
        if (spec.synthetic) result.predicted_slope = spec.synthetic->slope;
    } catch (const FitError& e) {
        fit_error = e.what();
    }
    if (result.fit) result.fit->predicted_slope = result.predicted_slope;

    io::Table t{{"kappa", "T", "censored", "slope_pred", "slope_fit", "ci_halfwidth"}, {}};
    for (const auto& row : result.rows)
        t.add_row({num(row.kappa), num(row.T), row.censored ? "1" : "0", num(result.predicted_slope),
                   result.fit ? num(result.fit->slope) : "", result.fit ? num(result.fit->ci_halfwidth) : ""});
    if (c.cfg.output.wants("csv")) {
        io::write_csv(t, c.out / "sweep.csv");
        if (!spec.extra_thresholds.empty()) {
            io::Table s{{"kappa", "threshold", "T", "censored"}, {}};
            for (const auto& row : result.rows) {
                s.add_row({num(row.kappa), num(spec.threshold), num(row.T), row.censored ? "1" : "0"});
                for (const auto& x : row.sensitivity)
                    s.add_row({num(row.kappa), num(x.threshold), num(x.time), x.censored ? "1" : "0"});
            }
            io::write_csv(s, c.out / "threshold_sensitivity.csv");
        }
    }
    if (c.cfg.output.wants("svg")) write_sweep_svg(result, spec, c.out / "sweep.svg");

    json summary;
    summary["command"] = "sweep";
    summary["config"] = describe(c.cfg);
    summary["threshold"] = spec.threshold;
    summary["points"] = result.rows.size();
    summary["predicted_slope"] = result.predicted_slope;
    if (result.fit) {
        const auto& f = *result.fit;
        summary["fit"] = {{"slope", f.slope},
                          {"intercept", f.intercept},
                          {"ci_halfwidth", f.ci_halfwidth},
                          {"residual_rms", f.residual_rms},
                          {"fitted_c", f.fitted_c},
                          {"log_correction", f.log_correction_applied},
                          {"n_points", f.n_points},
                          {"abs_slope_error", std::abs(f.slope - result.predicted_slope)}};
        summary["status"] = "ok";
    } else {
        summary["fit"] = nullptr;
        summary["status"] = "insufficient_data";
        summary["error"] = fit_error;
    }
    write_json(summary, c.out / "summary.json");
    if (!result.fit) {
        std::cerr << "error: " << fit_error << '\n';
        return kInsufficientData;
    }
    std::cout << "sweep: slope " << num(result.fit->slope) << " (predicted " << num(result.predicted_slope)
              << ") -> " << c.out.string() << '\n';
    return kOk;
}

// ---------------------------------------------------------------------------
// validate
// ---------------------------------------------------------------------------

struct CheckResult {
    bool pass = false;
    std::string detail;
};

struct Check {
    std::string name;
    std::function<CheckResult(const Globals&)> run;
};

std::string fmt(const char* f, double a, double b) {
    char buf[200];
    std::snprintf(buf, sizeof buf, f, a, b);
    return buf;
}

std::uint64_t validation_seed(const Globals& g) { return g.seed.value_or(20240611ull); }

CheckResult check_heat_decay(const Globals& g) {
    const double kappa = 0.1;
    CartesianGrid grid{64, 64, std::numbers::pi};
    auto f = make_field(grid, [](Vec2 p) { return std::sin(p.x); });
    const double n0 = std::sqrt(l2_norm_sq(f));
    f = diffuse_spectral(std::move(f), kappa, 1.0);
    const double grid_err = std::abs(std::sqrt(l2_norm_sq(f)) / n0 - std::exp(-kappa));

    SdeConfig sde{0.01, 1.0, g.wrong_noise ? NoiseConvention::TwoKappa : NoiseConvention::SqrtTwoKappa};
    const auto rho0 = [](Vec2 p) { return std::sin(p.x); };
    double worst = 0.0;
    for (int i = 0; i < 8; ++i) {
        const Vec2 x{0.3 + 0.77 * i, -1.0 + 0.25 * i};
        const auto ens = feynman_kac_ensemble(flow::Zero{}, diffusivity::Isotropic{kappa}, x, sde,
                                           mix_seed(validation_seed(g), i), 100000, resolve_threads(g.threads));
        const auto est = estimate_density(rho0, ens);
        worst = std::max(worst, std::abs(est.mean - std::exp(-kappa) * std::sin(x.x)) / est.standard_error);
    }
    return {grid_err <= 1e-6 && worst <= 3.0, fmt("grid |ratio - e^-0.1| = %.2e, MC worst |z| = %.2f", grid_err, worst)};
}

CheckResult check_linear_shear(const Globals&) {
    const double kappa = 1e-3, dt = 0.01;
    CartesianGrid grid{256, 256, std::numbers::pi};
    auto f = make_field(grid, [](Vec2 p) { return std::sin(p.x); });
    CartesianStepper stepper(grid);
    double worst = 0.0;
    for (int k = 1; k <= 1000; ++k) {
        stepper.strang(f, flow::ConstantShear{1.0}, kappa, dt);
        const double t = f.time;
        const double a = kelvin_mode_amplitude(f, 1.0, t, -std::numbers::pi / 2, std::numbers::pi / 2);
        worst = std::max(worst, std::abs(a / std::exp(-kappa * (t + t * t * t / 3.0)) - 1.0));
    }
    return {worst <= 0.01, fmt("max relative amplitude error %.2e over t <= %.0f", worst, 10.0)};
}

CheckResult check_duality(const Globals& g) {
    const double kappa = 0.1, t = 1.0;
    const Quadrature q = box_quadrature(8, 4, 0.0, kTwoPi, -std::numbers::pi, std::numbers::pi);
    SdeConfig sde{0.01, t, g.wrong_noise ? NoiseConvention::TwoKappa : NoiseConvention::SqrtTwoKappa};
    const auto iv = integrated_variance([](Vec2 p) { return std::sin(p.x); }, flow::Zero{},
                                        diffusivity::Isotropic{kappa}, q, sde, 10000, validation_seed(g),
                                        resolve_threads(g.threads));
    const double exact = std::numbers::pi * std::numbers::pi * (1.0 - std::exp(-2.0 * kappa * t));
    const double z = std::abs(iv.value - exact) / iv.standard_error;
    return {z <= 3.0, fmt("MC %.6f vs closed form, |z| = %.2f", iv.value, z)};
}

CheckResult check_partition_of_unity(const Globals& g) {
    CartesianGrid grid{128, 128, std::numbers::pi};
    const RegularizedDelta d = delta_for_grid(grid);
    std::mt19937_64 rng(validation_seed(g));
    std::uniform_real_distribution<double> ux(0.0, kTwoPi), uy(-std::numbers::pi, std::numbers::pi);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) worst = std::max(worst, std::abs(discrete_kernel_mass(grid, d, {ux(rng), uy(rng)}) - 1.0));
    return {worst <= 1e-12, fmt("max |sum delta dx dy - 1| = %.2e over %.0f markers", worst, 100.0)};
}

const std::vector<Check>& checks() {
    static const std::vector<Check> all{{"heat_decay", check_heat_decay},
                                        {"linear_shear_closed_form", check_linear_shear},
                                        {"variance_dissipation_duality", check_duality},
                                        {"delta_partition_of_unity", check_partition_of_unity}};
    return all;
}

int cmd_validate(bool list, const Globals& g) {
    if (list) {
        for (const auto& c : checks()) std::cout << c.name << '\n';
        return kOk;
    }
    std::vector<std::string> failed;
    for (const auto& c : checks()) {
        const CheckResult r = c.run(g);
        std::cout << (r.pass ? "PASS " : "FAIL ") << c.name << ": " << r.detail << std::endl;
        if (!r.pass) failed.push_back(c.name);
    }
    if (failed.empty()) return kOk;
    std::cerr << "failed checks:";
    for (const auto& n : failed) std::cerr << ' ' << n;
    std::cerr << '\n';
    return kCheckFailure;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"enhdiff: enhanced-dissipation experiments for advection-diffusion"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    std::string out_dir;
    std::uint64_t seed = 0;
    app.add_option("--output-dir", out_dir, "Directory for artifacts (overrides output.directory)");
    auto* seed_opt = app.add_option("--seed", seed, "Base seed (overrides the config)");
    app.add_option("--threads", g.threads, "Worker threads, 0 = auto (ENHDIFF_THREADS, then hardware)");
    app.add_flag("--inject-wrong-noise", g.wrong_noise, "Test hook: use 2 kappa as the noise amplitude")
        ->group("");

    fs::path run_cfg, sweep_cfg;
    bool list = false;
    auto* run = app.add_subcommand("run", "Run one simulation");
    run->add_option("config", run_cfg, "Config file")->required();
    auto* sweep = app.add_subcommand("sweep", "Mixing-time sweep over kappa and scaling fit");
    sweep->add_option("config", sweep_cfg, "Config file")->required();
    auto* validate_cmd = app.add_subcommand("validate", "Run the built-in oracle checks");
    validate_cmd->add_flag("--list", list, "Print check names and exit");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kConfigError;
    }
    if (!out_dir.empty()) g.output_dir = out_dir;
    if (*seed_opt) g.seed = seed;

    try {
        if (*run) return cmd_run(run_cfg, g);
        if (*sweep) return cmd_sweep(sweep_cfg, g);
        return cmd_validate(list, g);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const FitError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kInsufficientData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kCheckFailure;
    }
}
