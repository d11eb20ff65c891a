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

#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "error.hpp"
#include "experiments.hpp"
#include "io.hpp"

namespace enhdiff {

struct OutputConfig {
    std::filesystem::path directory = "enhdiff-out";
    std::set<std::string> formats{"csv", "svg"};
    std::size_t snapshot_every = 0;  ///< steps between binary snapshots (0: final only)

    bool wants(const std::string& f) const { return formats.count(f) != 0; }
};

/// Validated experiment configuration.
struct RunConfig {
    ExperimentSpec spec;
    std::optional<double> kappa;  ///< diffusivity.kappa (required by `run`)
    std::optional<std::filesystem::path> restart;
    OutputConfig output;
    std::optional<std::filesystem::path> interface_file;
    double epsilon_cells = 2.0;
    std::filesystem::path source;
};

namespace config_detail {

struct Entry {
    std::string value;
    std::size_t line = 0;
};

inline const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys{
        "seed",
        "flow.kind", "flow.n", "flow.alpha", "flow.c", "flow.q", "flow.s",
        "diffusivity.model", "diffusivity.kappa", "diffusivity.gamma",
        "initial_data.kind", "initial_data.beta", "initial_data.restart",
        "solver.backend", "solver.nx", "solver.ny", "solver.ly", "solver.nr", "solver.ntheta", "solver.dt",
        "solver.horizon", "solver.steps_per_timescale", "solver.horizon_factor", "solver.interpolation",
        "solver.samples", "solver.mc_nx", "solver.mc_ny", "solver.mc_stride",
        "experiment.kappas", "experiment.threshold", "experiment.extra_thresholds", "experiment.log_correction",
        "experiment.synthetic_slope", "experiment.synthetic_log_q",
        "output.directory", "output.formats", "output.snapshot_every",
        "ibm.interface", "ibm.epsilon_cells"};
    return keys;
}

inline std::string trim(std::string s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return {};
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

class Document {
public:
    Document(std::istream& is, std::string origin) : origin_(std::move(origin)) {
        std::string raw;
        std::size_t lineno = 0;
        while (std::getline(is, raw)) {
            ++lineno;
            if (const auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
            const std::string line = trim(raw);
            if (line.empty()) continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos) fail(lineno, "expected 'section.key = value'");
            const std::string key = trim(line.substr(0, eq));
            const std::string value = trim(line.substr(eq + 1));
            if (key.empty()) fail(lineno, "empty key");
            if (!known_keys().count(key)) fail(lineno, "unknown key '" + key + "'");
            if (value.empty()) fail(lineno, "key '" + key + "' has no value");
            if (auto it = entries_.find(key); it != entries_.end())
                fail(lineno, "duplicate key '" + key + "' (first set on line " + std::to_string(it->second.line) + ")");
            entries_[key] = {value, lineno};
        }
    }

    [[noreturn]] void fail(std::size_t line, const std::string& msg) const {
        throw ConfigError(origin_ + ":" + std::to_string(line) + ": " + msg);
    }

    [[noreturn]] void fail_key(const std::string& key, const std::string& msg) const {
        if (auto it = entries_.find(key); it != entries_.end()) fail(it->second.line, key + ": " + msg);
        throw ConfigError(origin_ + ": " + key + ": " + msg);
    }

    bool has(const std::string& key) const { return entries_.count(key) != 0; }

    void require(const std::string& key) const {
        if (!has(key)) throw ConfigError(origin_ + ": missing required key '" + key + "'");
    }

    std::string text(const std::string& key, std::string fallback = {}) const {
        const auto it = entries_.find(key);
        return it == entries_.end() ? fallback : it->second.value;
    }

    double number(const std::string& key, double fallback) const {
        const auto it = entries_.find(key);
        if (it == entries_.end()) return fallback;
        try {
            return io::parse_double(it->second.value);
        } catch (const ConfigError&) {
            fail(it->second.line, key + ": expected a number, got '" + it->second.value + "'");
        }
    }

    std::uint64_t integer(const std::string& key, std::uint64_t fallback) const {
        const auto it = entries_.find(key);
        if (it == entries_.end()) return fallback;
        const std::string& v = it->second.value;
        std::uint64_t out = 0;
        const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
        if (res.ec != std::errc() || res.ptr != v.data() + v.size())
            fail(it->second.line, key + ": expected a non-negative integer, got '" + v + "'");
        return out;
    }

    std::vector<double> numbers(const std::string& key) const {
        std::vector<double> out;
        const auto it = entries_.find(key);
        if (it == entries_.end()) return out;
        for (const auto& cell : io::split(it->second.value, ',')) {
            try {
                out.push_back(io::parse_double(cell));
            } catch (const ConfigError&) {
                fail(it->second.line, key + ": bad list element '" + trim(cell) + "'");
            }
        }
        return out;
    }

    template <class Map>
    auto choice(const std::string& key, const Map& options, typename Map::mapped_type fallback) const {
        const auto it = entries_.find(key);
        if (it == entries_.end()) return fallback;
        const auto o = options.find(it->second.value);
        if (o == options.end()) {
            std::string allowed;
            for (const auto& [name, _] : options) allowed += (allowed.empty() ? "" : "|") + name;
            fail(it->second.line, key + ": expected one of " + allowed + ", got '" + it->second.value + "'");
        }
        return o->second;
    }

    const std::string& origin() const noexcept { return origin_; }

private:
    std::string origin_;
    std::map<std::string, Entry> entries_;
};

inline VelocityField parse_flow(const Document& doc) {
    doc.require("flow.kind");
    const std::string kind = doc.text("flow.kind");
    const std::map<std::string, std::set<std::string>> params{{"zero", {}},
                                                              {"power_shear", {"flow.n"}},
                                                              {"holder_shear", {"flow.alpha", "flow.c"}},
                                                              {"circular", {"flow.q"}},
                                                              {"constant_shear", {"flow.s"}}};
    const auto p = params.find(kind);
    if (p == params.end())
        doc.fail_key("flow.kind", "expected zero|power_shear|holder_shear|circular|constant_shear, got '" + kind + "'");
    for (const std::string key : {"flow.n", "flow.alpha", "flow.c", "flow.q", "flow.s"})
        if (doc.has(key) && !p->second.count(key)) doc.fail_key(key, "not a parameter of flow.kind = " + kind);

    VelocityField field = flow::Zero{};
    if (kind == "power_shear") {
        doc.require("flow.n");
        const auto n = doc.integer("flow.n", 1);
        if (n < 1) doc.fail_key("flow.n", "must be >= 1");
        field = flow::PowerShear{static_cast<int>(n)};
    } else if (kind == "holder_shear") {
        doc.require("flow.alpha");
        field = flow::HolderShear{doc.number("flow.alpha", 0.5), doc.number("flow.c", 1.0)};
    } else if (kind == "circular") {
        doc.require("flow.q");
        field = flow::Circular{doc.number("flow.q", 1.0)};
    } else if (kind == "constant_shear") {
        field = flow::ConstantShear{doc.number("flow.s", 1.0)};
    }
    try {
        validate(field);
    } catch (const Error& e) {
        doc.fail_key("flow.kind", e.what());
    }
    return field;
}

}  // namespace config_detail

enum class ConfigMode { Run, Sweep };

/// Parse and validate a config document. Errors carry "origin:line:".
inline RunConfig parse_config(std::istream& is, const std::string& origin, ConfigMode mode) {
    using config_detail::Document;
    const Document doc(is, origin);
    RunConfig cfg;
    cfg.source = origin;
    ExperimentSpec& spec = cfg.spec;

    spec.flow = config_detail::parse_flow(doc);
    spec.seed = doc.integer("seed", 0);

    const std::map<std::string, bool> models{{"isotropic", false}, {"anisotropic_radial", true}};
    spec.anisotropic = doc.choice("diffusivity.model", models, doc.has("diffusivity.gamma"));
    spec.gamma = doc.number("diffusivity.gamma", 0.0);
    if (!(spec.gamma >= 0.0 && spec.gamma <= 1.0)) doc.fail_key("diffusivity.gamma", "must lie in [0, 1]");
    if (spec.anisotropic && !std::holds_alternative<flow::Circular>(spec.flow))
        doc.fail_key(doc.has("diffusivity.model") ? "diffusivity.model" : "diffusivity.gamma",
                     "anisotropic diffusivity requires flow.kind = circular");
    if (doc.has("diffusivity.kappa")) {
        const double k = doc.number("diffusivity.kappa", 0.0);
        if (!(k > 0.0 && k < 1.0)) doc.fail_key("diffusivity.kappa", "must lie in (0, 1)");
        cfg.kappa = k;
    }

    doc.require("initial_data.kind");
    const std::map<std::string, InitialKind> kinds{{"sine_x", InitialKind::SineX},
                                                   {"tent_shear", InitialKind::TentShear},
                                                   {"annulus_circular", InitialKind::AnnulusCircular}};
    spec.initial = doc.choice("initial_data.kind", kinds, InitialKind::SineX);
    const bool circular = std::holds_alternative<flow::Circular>(spec.flow);
    if ((spec.initial == InitialKind::AnnulusCircular) != circular)
        doc.fail_key("initial_data.kind", "'" + doc.text("initial_data.kind") + "' does not pair with flow.kind = " +
                                              doc.text("flow.kind"));
    if (doc.has("initial_data.beta")) {
        const double b = doc.number("initial_data.beta", 0.0);
        if (!(b > 0.0)) doc.fail_key("initial_data.beta", "must be > 0");
        spec.beta = b;
    } else if (spec.initial == InitialKind::TentShear && std::holds_alternative<flow::Zero>(spec.flow)) {
        doc.fail_key("initial_data.kind", "tent_shear with flow.kind = zero needs initial_data.beta");
    }
    if (doc.has("initial_data.restart")) cfg.restart = doc.text("initial_data.restart");

    const std::map<std::string, Backend> backends{{"grid", Backend::Grid}, {"monte_carlo", Backend::MonteCarlo}};
    spec.backend = doc.choice("solver.backend", backends, Backend::Grid);
    Resolution& r = spec.res;
    auto pow2 = [&](const std::string& key, std::size_t fallback, std::size_t minimum) {
        const auto v = static_cast<std::size_t>(doc.integer(key, fallback));
        if (!is_power_of_two(v) || v < minimum)
            doc.fail_key(key, "must be a power of two >= " + std::to_string(minimum));
        return v;
    };
    auto positive = [&](const std::string& key, double fallback) {
        const double v = doc.number(key, fallback);
        if (doc.has(key) && !(v > 0.0)) doc.fail_key(key, "must be > 0");
        return v;
    };
    auto count = [&](const std::string& key, std::size_t fallback, std::size_t minimum) {
        const auto v = static_cast<std::size_t>(doc.integer(key, fallback));
        if (v < minimum) doc.fail_key(key, "must be >= " + std::to_string(minimum));
        return v;
    };
    r.nx = pow2("solver.nx", r.nx, 8);
    r.ny = pow2("solver.ny", r.ny, 8);
    r.ntheta = pow2("solver.ntheta", r.ntheta, 4);
    r.nr = count("solver.nr", r.nr, 3);
    r.ly = positive("solver.ly", r.ly);
    r.dt = positive("solver.dt", r.dt);
    r.horizon = positive("solver.horizon", r.horizon);
    r.steps_per_timescale = positive("solver.steps_per_timescale", r.steps_per_timescale);
    r.horizon_factor = positive("solver.horizon_factor", r.horizon_factor);
    const std::map<std::string, Interpolation> interps{{"auto", Interpolation::Auto},
                                                       {"cubic", Interpolation::CubicLagrange},
                                                       {"spectral_shift", Interpolation::SpectralShift}};
    r.interpolation = doc.choice("solver.interpolation", interps, Interpolation::Auto);
    r.mc_samples = count("solver.samples", r.mc_samples, 2);
    r.mc_nx = count("solver.mc_nx", r.mc_nx, 1);
    r.mc_ny = count("solver.mc_ny", r.mc_ny, 1);
    r.mc_ladder_stride = count("solver.mc_stride", r.mc_ladder_stride, 1);
    if (circular && spec.backend == Backend::Grid && doc.has("solver.nx"))
        doc.fail_key("solver.nx", "circular flows run on the polar grid; use solver.nr / solver.ntheta");

    spec.kappas = doc.numbers("experiment.kappas");
    spec.threshold = doc.number("experiment.threshold", spec.threshold);
    if (!(spec.threshold > 0.0 && spec.threshold < 1.0)) doc.fail_key("experiment.threshold", "must lie in (0, 1)");
    spec.extra_thresholds = doc.numbers("experiment.extra_thresholds");
    for (double th : spec.extra_thresholds)
        if (!(th > 0.0 && th < 1.0)) doc.fail_key("experiment.extra_thresholds", "each threshold must lie in (0, 1)");
    const std::map<std::string, LogCorrection> logs{
        {"auto", LogCorrection::Auto}, {"on", LogCorrection::On}, {"off", LogCorrection::Off}};
    spec.log_correction = doc.choice("experiment.log_correction", logs, LogCorrection::Auto);
    if (doc.has("experiment.synthetic_slope")) {
        SyntheticLaw law;
        law.slope = doc.number("experiment.synthetic_slope", -0.5);
        if (doc.has("experiment.synthetic_log_q")) law.log_q = positive("experiment.synthetic_log_q", 1.0);
        spec.synthetic = law;
    } else if (doc.has("experiment.synthetic_log_q")) {
        doc.fail_key("experiment.synthetic_log_q", "requires experiment.synthetic_slope");
    }

    cfg.output.directory = doc.text("output.directory", cfg.output.directory.string());
    if (doc.has("output.formats")) {
        cfg.output.formats.clear();
        for (auto f : io::split(doc.text("output.formats"), ',')) {
            f = config_detail::trim(f);
            if (f != "csv" && f != "svg" && f != "bin") doc.fail_key("output.formats", "unknown format '" + f + "' (csv|svg|bin)");
            cfg.output.formats.insert(f);
        }
    }
    cfg.output.snapshot_every = doc.integer("output.snapshot_every", 0);

    if (doc.has("ibm.interface")) cfg.interface_file = doc.text("ibm.interface");
    cfg.epsilon_cells = doc.number("ibm.epsilon_cells", 2.0);
    if (cfg.epsilon_cells < 2.0) doc.fail_key("ibm.epsilon_cells", "must be >= 2 (kernel under-resolved)");
    if (cfg.interface_file && circular) doc.fail_key("ibm.interface", "interfaces are supported on Cartesian grids only");

    if (mode == ConfigMode::Run) {
        doc.require("diffusivity.kappa");
        spec.kappas = {*cfg.kappa};
    } else {
        doc.require("experiment.kappas");
        if (spec.kappas.size() < 5) doc.fail_key("experiment.kappas", "needs at least 5 values");
        for (std::size_t i = 1; i < spec.kappas.size(); ++i)
            if (!(spec.kappas[i] < spec.kappas[i - 1])) doc.fail_key("experiment.kappas", "must be strictly decreasing");
        for (double k : spec.kappas)
            if (!(k > 0.0 && k < 1.0)) doc.fail_key("experiment.kappas", "every value must lie in (0, 1)");
        if (!spec.synthetic) {
            try {
                (void)family_of(spec);
            } catch (const ConfigError& e) {
                doc.fail_key("flow.kind", e.what());
            }
        }
    }
    return cfg;
}

inline RunConfig load_config(const std::filesystem::path& path, ConfigMode mode) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot read config " + path.string());
    RunConfig cfg = parse_config(is, path.string(), mode);
    // Relative file references resolve against the config's directory.
    const auto base = path.parent_path();
    if (cfg.restart && cfg.restart->is_relative()) cfg.restart = base / *cfg.restart;
    if (cfg.interface_file && cfg.interface_file->is_relative()) cfg.interface_file = base / *cfg.interface_file;
    return cfg;
}

}  // namespace enhdiff
