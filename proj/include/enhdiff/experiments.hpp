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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "error.hpp"
#include "feynman_kac.hpp"
#include "flows.hpp"
#include "grid.hpp"
#include "stats.hpp"
#include "stochastic.hpp"

namespace enhdiff {

// ---------------------------------------------------------------------------
// Initial data
// ---------------------------------------------------------------------------

enum class InitialKind { SineX, TentShear, AnnulusCircular };

inline std::string initial_kind_name(InitialKind k) {
    switch (k) {
        case InitialKind::SineX: return "sine_x";
        case InitialKind::TentShear: return "tent_shear";
        case InitialKind::AnnulusCircular: return "annulus_circular";
    }
    return "?";
}

/// Localization exponent beta of the tent/annulus data for a flow family:
/// 1/(n+2) for critical shears (constant shear counts as n = 1), 1/(alpha+2)
/// for Hoelder shears, 1/(q+2) for circular flows.
inline double family_beta(const VelocityField& field) {
    return std::visit(Overloaded{[](flow::PowerShear f) { return 1.0 / (f.n + 2.0); },
                                 [](flow::ConstantShear) { return 1.0 / 3.0; },
                                 [](flow::HolderShear f) { return 1.0 / (f.alpha + 2.0); },
                                 [](flow::Circular f) { return 1.0 / (f.q + 2.0); },
                                 [](flow::Zero) -> double {
                                     throw ConfigError("zero flow has no localization exponent; set beta explicitly");
                                 }},
                      field);
}

/// Evaluable initial datum with exact support metadata.
///  - SineX:           rho0 = sin x
///  - TentShear:       rho0 = phi(y) sin x,               support |y| <= kappa^beta
///  - AnnulusCircular: rho0 = phi(r - 3 kappa^beta) sin theta, support [2, 4] kappa^beta
/// with the tent phi(s) = (kappa^beta - |s|)_+ peaking at kappa^beta.
struct InitialData {
    InitialKind kind = InitialKind::SineX;
    double kappa = 0.0;
    double beta = 0.0;
    double scale = 0.0;  ///< kappa^beta
    double support_lo = -std::numeric_limits<double>::infinity();
    double support_hi = std::numeric_limits<double>::infinity();

    double tent(double s) const noexcept { return std::max(scale - std::abs(s), 0.0); }

    double operator()(Vec2 p) const {
        switch (kind) {
            case InitialKind::SineX: return std::sin(p.x);
            case InitialKind::TentShear: return tent(p.y) * std::sin(p.x);
            case InitialKind::AnnulusCircular: {
                const double r = std::hypot(p.x, p.y);
                if (r == 0.0) return 0.0;
                return tent(r - 3.0 * scale) * (p.y / r);
            }
        }
        return 0.0;
    }

    double polar(double r, double theta) const {
        if (kind != InitialKind::AnnulusCircular) return (*this)(Vec2{r * std::cos(theta), r * std::sin(theta)});
        return tent(r - 3.0 * scale) * std::sin(theta);
    }

    /// Exact ||rho0||^2: over [0,2pi) x [-ly, ly) for the Cartesian kinds
    /// (ly must contain the tent support), over the plane for the annulus.
    double exact_norm_sq(double ly = std::numbers::pi) const {
        const double a = scale;
        switch (kind) {
            case InitialKind::SineX: return std::numbers::pi * 2.0 * ly;
            case InitialKind::TentShear: return std::numbers::pi * 2.0 * a * a * a / 3.0;
            // int phi(r - 3a)^2 r dr = 3a * 2a^3/3 by symmetry of phi^2 about 3a
            case InitialKind::AnnulusCircular: return std::numbers::pi * 3.0 * a * 2.0 * a * a * a / 3.0;
        }
        return 0.0;
    }

    /// sup |grad rho0|.
    double grad_sup() const {
        switch (kind) {
            case InitialKind::SineX: return 1.0;
            case InitialKind::TentShear: return std::hypot(1.0, scale);
            case InitialKind::AnnulusCircular: return std::hypot(1.0, scale / (2.0 * scale));
        }
        return 0.0;
    }
};

inline InitialData build_initial_data(InitialKind kind, const VelocityField& field, double kappa,
                                      std::optional<double> beta_override = std::nullopt) {
    if (!(kappa > 0.0 && kappa < 1.0)) throw ConfigError("initial data: kappa must lie in (0, 1)");
    InitialData d;
    d.kind = kind;
    d.kappa = kappa;
    const bool circular = std::holds_alternative<flow::Circular>(field);
    switch (kind) {
        case InitialKind::SineX:
            if (circular) throw ConfigError("initial data sine_x is defined on the periodic box, not for circular flows");
            return d;
        case InitialKind::TentShear:
            if (circular) throw ConfigError("initial data tent_shear requires a shear flow");
            break;
        case InitialKind::AnnulusCircular:
            if (!circular) throw ConfigError("initial data annulus_circular requires a circular flow");
            break;
    }
    d.beta = beta_override ? *beta_override : family_beta(field);
    if (!(d.beta > 0.0)) throw ConfigError("initial data: beta must be > 0");
    d.scale = std::pow(kappa, d.beta);
    if (kind == InitialKind::TentShear) {
        d.support_lo = -d.scale;
        d.support_hi = d.scale;
    } else {
        d.support_lo = 2.0 * d.scale;
        d.support_hi = 4.0 * d.scale;
    }
    return d;
}

// ---------------------------------------------------------------------------
// Predicted rates
// ---------------------------------------------------------------------------

enum class Family { CriticalShear, Holder, Circular, AnisotropicCircular };

struct FamilyParams {
    double n = 1.0;
    double alpha = 1.0;
    double q = 1.0;
    double gamma = 0.0;
};

/// Rate exponent; the mixing-time slope prediction is its negative.
inline double predicted_exponent(Family family, const FamilyParams& p) {
    switch (family) {
        case Family::CriticalShear: return p.n / (p.n + 2.0);
        case Family::Holder: return p.alpha / (p.alpha + 2.0);
        case Family::Circular: return p.q / (p.q + 2.0);
        case Family::AnisotropicCircular: return (p.q + p.gamma) / (p.q + 2.0);
    }
    throw ConfigError("predicted_exponent: unknown family");
}

enum class BalanceRegime { RadialDominant, AngularDominant, Balanced };

inline std::string regime_name(BalanceRegime r) {
    switch (r) {
        case BalanceRegime::RadialDominant: return "radial_dominant";
        case BalanceRegime::AngularDominant: return "angular_dominant";
        case BalanceRegime::Balanced: return "balanced";
    }
    return "?";
}

/// gamma < q: kappa^{q/(q+2)} dominates; gamma > q: kappa^{1+gamma/(q+2)}; equal: balanced.
inline BalanceRegime balance_regime_classifier(double q, double gamma) {
    if (gamma < q) return BalanceRegime::RadialDominant;
    if (gamma > q) return BalanceRegime::AngularDominant;
    return BalanceRegime::Balanced;
}

/// Mixing-time slope d log T / d log kappa selected by the balance regime.
inline double regime_slope(double q, double gamma) {
    switch (balance_regime_classifier(q, gamma)) {
        case BalanceRegime::RadialDominant: return -q / (q + 2.0);
        case BalanceRegime::AngularDominant: return -(1.0 + gamma / (q + 2.0));
        case BalanceRegime::Balanced: return -(q + gamma) / (q + 2.0);
    }
    return 0.0;
}

// ---------------------------------------------------------------------------
// Experiment specification
// ---------------------------------------------------------------------------

enum class Backend { Grid, MonteCarlo };
enum class LogCorrection { Auto, On, Off };

/// Exact law T(kappa) = kappa^slope (1 + log(1/kappa^{q/(q+2)}))^[log_q set]
/// used instead of a solver (fit self-test).
struct SyntheticLaw {
    double slope = -0.5;
    std::optional<double> log_q;

    double operator()(double kappa) const {
        double t = std::pow(kappa, slope);
        if (log_q) t *= 1.0 + std::log(1.0 / std::pow(kappa, *log_q / (*log_q + 2.0)));
        return t;
    }
};

struct Resolution {
    std::size_t nx = 256;
    std::size_t ny = 256;
    double ly = 0.0;  ///< 0: max(8 kappa^beta, 1) for tent data, pi for sine_x
    std::size_t nr = 256;
    std::size_t ntheta = 256;
    double dt = 0.0;  ///< 0: characteristic time / steps_per_timescale
    double steps_per_timescale = 200.0;
    double horizon = 0.0;  ///< 0: horizon_factor x characteristic time
    double horizon_factor = 50.0;
    Interpolation interpolation = Interpolation::Auto;
    std::size_t mc_samples = 1000;
    std::size_t mc_nx = 16;
    std::size_t mc_ny = 16;
    std::size_t mc_ladder_stride = 10;
};

struct ExperimentSpec {
    VelocityField flow = flow::Zero{};
    double gamma = 0.0;
    bool anisotropic = false;
    std::vector<double> kappas;
    InitialKind initial = InitialKind::SineX;
    std::optional<double> beta;
    Backend backend = Backend::Grid;
    double threshold = 1.0 / std::numbers::e;
    std::vector<double> extra_thresholds;
    Resolution res;
    std::uint64_t seed = 0;
    LogCorrection log_correction = LogCorrection::Auto;
    std::optional<SyntheticLaw> synthetic;
    unsigned threads = 1;
    NoiseConvention noise = NoiseConvention::SqrtTwoKappa;

    DiffusivityModel diffusivity(double kappa) const {
        if (anisotropic) return diffusivity::AnisotropicRadial{kappa, gamma};
        return diffusivity::Isotropic{kappa};
    }
};

inline std::vector<double> log_spaced_kappas(double hi, double lo, std::size_t count) {
    if (count < 2 || !(hi > lo) || !(lo > 0.0)) throw ConfigError("log_spaced_kappas: need hi > lo > 0 and count >= 2");
    std::vector<double> out(count);
    const double a = std::log10(hi), b = std::log10(lo);
    for (std::size_t i = 0; i < count; ++i)
        out[i] = std::pow(10.0, a + (b - a) * static_cast<double>(i) / static_cast<double>(count - 1));
    return out;
}

inline Family family_of(const ExperimentSpec& spec) {
    if (std::holds_alternative<flow::Circular>(spec.flow))
        return spec.anisotropic ? Family::AnisotropicCircular : Family::Circular;
    if (std::holds_alternative<flow::HolderShear>(spec.flow)) return Family::Holder;
    if (std::holds_alternative<flow::PowerShear>(spec.flow) || std::holds_alternative<flow::ConstantShear>(spec.flow))
        return Family::CriticalShear;
    throw ConfigError("no scaling family for flow " + flow_name(spec.flow));
}

inline FamilyParams family_params(const ExperimentSpec& spec) {
    FamilyParams p;
    std::visit(Overloaded{[&](flow::PowerShear f) { p.n = f.n; }, [&](flow::ConstantShear) { p.n = 1.0; },
                          [&](flow::HolderShear f) { p.alpha = f.alpha; },
                          [&](flow::Circular f) { p.q = f.q; }, [](flow::Zero) {}},
               spec.flow);
    p.gamma = spec.anisotropic ? spec.gamma : 0.0;
    return p;
}

/// Predicted mixing-time slope for a sweep (regime-selected for circular flows).
inline double predicted_slope(const ExperimentSpec& spec) {
    const Family fam = family_of(spec);
    const FamilyParams p = family_params(spec);
    if (fam == Family::Circular || fam == Family::AnisotropicCircular) return regime_slope(p.q, p.gamma);
    return -predicted_exponent(fam, p);
}

inline bool log_correction_enabled(const ExperimentSpec& spec) {
    if (spec.log_correction == LogCorrection::On) return true;
    if (spec.log_correction == LogCorrection::Off) return false;
    return std::holds_alternative<flow::Circular>(spec.flow);
}

inline void validate(const ExperimentSpec& spec, bool sweep) {
    validate(spec.flow);
    if (spec.anisotropic && !std::holds_alternative<flow::Circular>(spec.flow))
        throw ConfigError("anisotropic diffusivity is only valid on polar (circular-flow) domains");
    if (!(spec.gamma >= 0.0 && spec.gamma <= 1.0)) throw ConfigError("diffusivity.gamma must lie in [0, 1]");
    if (!(spec.threshold > 0.0 && spec.threshold < 1.0)) throw ConfigError("experiment.threshold must lie in (0, 1)");
    if (sweep) {
        if (spec.kappas.size() < 5) throw ConfigError("experiment.kappas needs at least 5 values");
        for (std::size_t i = 1; i < spec.kappas.size(); ++i)
            if (!(spec.kappas[i] < spec.kappas[i - 1]))
                throw ConfigError("experiment.kappas must be strictly decreasing");
    }
    for (double k : spec.kappas)
        if (!(k > 0.0 && k < 1.0)) throw ConfigError("every kappa must lie in (0, 1)");
}

// ---------------------------------------------------------------------------
// Grid simulation driver
// ---------------------------------------------------------------------------

/// Natural time scale of a run: the smaller of the diffusion time across the
/// initial-data width and the shear-enhanced time (D u'^2)^{-1/3}, both
/// evaluated where the data sits.
inline double characteristic_time(const ExperimentSpec& spec, const InitialData& init) {
    const double kappa = init.kappa;
    const bool localized = init.kind != InitialKind::SineX;
    const double width = localized ? init.scale : 1.0;
    double shear_rate = 0.0;
    double local_kappa = kappa;
    std::visit(Overloaded{[&](flow::Zero) {},
                          [&](flow::PowerShear f) { shear_rate = f.n * std::pow(width, f.n - 1); },
                          [&](flow::ConstantShear f) { shear_rate = std::abs(f.s); },
                          [&](flow::HolderShear f) { shear_rate = f.alpha * f.c * std::pow(width, f.alpha - 1.0); },
                          [&](flow::Circular f) {
                              const double r = 3.0 * init.scale;
                              shear_rate = f.q * std::pow(r, f.q - 1.0);
                              local_kappa = eval_diffusivity_at_radius(spec.diffusivity(kappa), r);
                          }},
               spec.flow);
    const double t_diff = width * width / local_kappa;
    if (shear_rate <= 0.0) return t_diff;
    const double t_shear = std::cbrt(1.0 / (local_kappa * shear_rate * shear_rate));
    return std::min(t_diff, t_shear);
}

struct TimeGrid {
    double dt = 0.0;
    double horizon = 0.0;
};

/// Explicit solver.dt / solver.horizon win; otherwise both follow the characteristic time.
inline TimeGrid resolve_time_grid(const ExperimentSpec& spec, const InitialData& init) {
    const double t_char = characteristic_time(spec, init);
    TimeGrid tg;
    tg.dt = spec.res.dt > 0.0 ? spec.res.dt : t_char / spec.res.steps_per_timescale;
    tg.horizon = spec.res.horizon > 0.0 ? spec.res.horizon : spec.res.horizon_factor * t_char;
    tg.dt = std::min(tg.dt, tg.horizon);
    return tg;
}

/// Quadrature used by the Monte Carlo backend: the periodic box for sine_x,
/// T x [-2 kappa^beta, 2 kappa^beta] for the tent, the polar annulus
/// [kappa^beta / 4, 8 kappa^beta] for circular flows.
inline Quadrature monte_carlo_domain(const ExperimentSpec& spec, const InitialData& init) {
    const double ly = spec.res.ly > 0.0 ? spec.res.ly : std::numbers::pi;
    switch (init.kind) {
        case InitialKind::SineX: return box_quadrature(spec.res.mc_nx, spec.res.mc_ny, 0.0, kTwoPi, -ly, ly);
        case InitialKind::TentShear:
            return box_quadrature(spec.res.mc_nx, spec.res.mc_ny, 0.0, kTwoPi, -2.0 * init.scale, 2.0 * init.scale);
        case InitialKind::AnnulusCircular:
            return annulus_quadrature(spec.res.mc_ny, spec.res.mc_nx, init.scale / 4.0, 8.0 * init.scale);
    }
    return {};
}

/// Owns one deterministic grid run (Cartesian for shear/zero flows, polar for
/// circular flows) for a single kappa.
class GridSimulation {
public:
    GridSimulation(const ExperimentSpec& spec, double kappa)
        : spec_(spec),
          kappa_(kappa),
          diff_(spec.diffusivity(kappa)),
          init_(build_initial_data(spec.initial, spec.flow, kappa, spec.beta)) {
        const TimeGrid tg = resolve_time_grid(spec, init_);
        dt_ = tg.dt;
        horizon_ = tg.horizon;
        if (const auto* c = std::get_if<flow::Circular>(&spec.flow)) {
            q_ = c->q;
            PolarGrid g{spec.res.nr, spec.res.ntheta, init_.scale / 4.0, 8.0 * init_.scale};
            polar_field_ = make_polar_field(g, [&](double r, double th) { return init_.polar(r, th); });
            polar_.emplace(g);
        } else {
            double ly = spec.res.ly;
            if (ly <= 0.0)
                ly = init_.kind == InitialKind::SineX ? std::numbers::pi : std::max(8.0 * init_.scale, 1.0);
            CartesianGrid g{spec.res.nx, spec.res.ny, ly};
            cart_field_ = make_field(g, init_);
            cart_.emplace(g, spec.res.interpolation, spec.threads);
        }
        norm0_sq_ = norm_sq();
    }

    bool is_polar() const noexcept { return polar_.has_value(); }
    double dt() const noexcept { return dt_; }
    double horizon() const noexcept { return horizon_; }
    double kappa() const noexcept { return kappa_; }
    const InitialData& initial() const noexcept { return init_; }
    const DiffusivityModel& diffusivity() const noexcept { return diff_; }
    double time() const noexcept { return is_polar() ? polar_field_.time : cart_field_.time; }
    double initial_norm_sq() const noexcept { return norm0_sq_; }
    const CartesianField& cartesian_field() const noexcept { return cart_field_; }
    const PolarField& polar_field() const noexcept { return polar_field_; }

    /// Replace the current field with a snapshot on the identical grid.
    void restart_from(CartesianField f) {
        if (is_polar()) throw ConfigError("restart: snapshot is Cartesian but the run is polar");
        const auto& g = cart_field_.grid;
        if (f.grid.nx != g.nx || f.grid.ny != g.ny || f.grid.ly != g.ly)
            throw ConfigError("restart: snapshot grid does not match the configured grid");
        cart_field_ = std::move(f);
    }

    void restart_from(PolarField f) {
        if (!is_polar()) throw ConfigError("restart: snapshot is polar but the run is Cartesian");
        const auto& g = polar_field_.grid;
        if (f.grid.nr != g.nr || f.grid.ntheta != g.ntheta || f.grid.r_min != g.r_min || f.grid.r_max != g.r_max)
            throw ConfigError("restart: snapshot grid does not match the configured grid");
        polar_field_ = std::move(f);
    }

    void step() { step(dt_); }

    void step(double h) {
        if (is_polar()) {
            polar_->step(polar_field_, q_, diff_, h);
        } else {
            cart_->strang(cart_field_, spec_.flow, kappa_, h);
        }
    }

    double norm_sq() const { return is_polar() ? l2_norm_sq(polar_field_) : l2_norm_sq(cart_field_); }

    void update_ledger(EnergyLedger& ledger) {
        if (is_polar()) {
            energy_ledger_update(ledger, polar_field_, diff_);
        } else {
            energy_ledger_update(ledger, cart_field_, kappa_, cart_->spectral());
        }
    }

private:
    ExperimentSpec spec_;
    double kappa_;
    DiffusivityModel diff_;
    InitialData init_;
    double dt_ = 0.0;
    double horizon_ = 0.0;
    double q_ = 0.0;
    double norm0_sq_ = 0.0;
    CartesianField cart_field_;
    PolarField polar_field_;
    std::optional<CartesianStepper> cart_;
    std::optional<PolarStepper> polar_;
};

// ---------------------------------------------------------------------------
// Mixing time
// ---------------------------------------------------------------------------

struct ThresholdCrossing {
    double threshold = 0.0;
    double time = 0.0;
    bool censored = true;
};

struct MixingTime {
    double kappa = 0.0;
    double T = 0.0;
    bool censored = false;
    double dt = 0.0;
    std::vector<ThresholdCrossing> sensitivity;
};

namespace detail {

inline MixingTime mixing_time_grid(const ExperimentSpec& spec, double kappa) {
    GridSimulation sim(spec, kappa);
    std::vector<ThresholdCrossing> crossings;
    crossings.push_back({spec.threshold, 0.0, true});
    for (double th : spec.extra_thresholds) crossings.push_back({th, 0.0, true});
    const double n0 = std::sqrt(sim.initial_norm_sq());
    std::size_t open = crossings.size();
    while (open > 0 && sim.time() < sim.horizon() * (1.0 - 1e-12)) {
        sim.step(std::min(sim.dt(), sim.horizon() - sim.time()));
        const double ratio = std::sqrt(sim.norm_sq()) / n0;
        for (auto& c : crossings) {
            if (c.censored && ratio <= c.threshold) {
                c.censored = false;
                c.time = sim.time();
                --open;
            }
        }
    }
    for (auto& c : crossings)
        if (c.censored) c.time = sim.horizon();
    MixingTime out{kappa, crossings.front().time, crossings.front().censored, sim.dt(), {}};
    out.sensitivity.assign(crossings.begin() + 1, crossings.end());
    return out;
}

inline MixingTime mixing_time_mc(const ExperimentSpec& spec, double kappa) {
    const InitialData init = build_initial_data(spec.initial, spec.flow, kappa, spec.beta);
    const TimeGrid tg = resolve_time_grid(spec, init);
    const double horizon = tg.horizon;
    const Quadrature domain = monte_carlo_domain(spec, init);

    double half_norm0 = 0.0;
    for (std::size_t i = 0; i < domain.size(); ++i) half_norm0 += 0.5 * domain.weights[i] * std::pow(init(domain.nodes[i]), 2);

    SdeConfig cfg;
    cfg.dt = tg.dt;
    cfg.t_final = horizon;
    cfg.noise = spec.noise;
    const StepLadder ladder = make_ladder(cfg.dt, cfg.t_final);
    std::vector<std::uint64_t> steps;
    const std::uint64_t stride = std::max<std::uint64_t>(1, spec.res.mc_ladder_stride);
    for (std::uint64_t k = stride - 1; k < ladder.steps; k += stride) steps.push_back(k);
    if (steps.empty() || steps.back() != ladder.steps - 1) steps.push_back(ladder.steps - 1);

    const auto series = integrated_variance_ladder(init, spec.flow, spec.diffusivity(kappa), domain, cfg,
                                                   spec.res.mc_samples, mix_seed(spec.seed, 0xC0FFEEull), steps,
                                                   spec.threads);
    std::vector<ThresholdCrossing> crossings;
    crossings.push_back({spec.threshold, horizon, true});
    for (double th : spec.extra_thresholds) crossings.push_back({th, horizon, true});
    for (const auto& s : series) {
        for (auto& c : crossings) {
            if (c.censored && s.value >= (1.0 - c.threshold * c.threshold) * half_norm0) {
                c.censored = false;
                c.time = s.time;
            }
        }
    }
    MixingTime out{kappa, crossings.front().time, crossings.front().censored, cfg.dt, {}};
    out.sensitivity.assign(crossings.begin() + 1, crossings.end());
    return out;
}

}  // namespace detail

/// First time on the step ladder with ||rho(t)|| <= theta ||rho0|| (grid), or
/// with integrated variance >= (1 - theta^2) ||rho0||^2 / 2 (Monte Carlo).
inline MixingTime measure_mixing_time(const ExperimentSpec& spec, double kappa) {
    if (spec.synthetic) return {kappa, (*spec.synthetic)(kappa), false, 0.0, {}};
    return spec.backend == Backend::Grid ? detail::mixing_time_grid(spec, kappa) : detail::mixing_time_mc(spec, kappa);
}

// ---------------------------------------------------------------------------
// Sweep and fit
// ---------------------------------------------------------------------------

struct ScalingFit {
    double slope = 0.0;
    double intercept = 0.0;
    double residual_rms = 0.0;
    double ci_halfwidth = 0.0;
    bool log_correction_applied = false;
    double fitted_c = 0.0;  ///< exp(intercept)
    double predicted_slope = 0.0;
    std::size_t n_points = 0;
};

struct SweepResult {
    std::vector<MixingTime> rows;
    std::optional<ScalingFit> fit;
    double predicted_slope = 0.0;
};

/// 1 + log(1 / kappa^{q/(q+2)}).
inline double log_correction_factor(double kappa, double q) { return 1.0 + std::log(1.0 / std::pow(kappa, q / (q + 2.0))); }

/// OLS of log T (optionally divided by the log correction) against log kappa
/// over the uncensored rows.
inline ScalingFit fit_mixing_times(const std::vector<MixingTime>& rows, bool log_correction, double q,
                                   double predicted) {
    std::vector<double> xs, ys, censored;
    for (const auto& r : rows) {
        if (r.censored) {
            censored.push_back(r.kappa);
            continue;
        }
        double t = r.T;
        if (log_correction) t /= log_correction_factor(r.kappa, q);
        xs.push_back(std::log(r.kappa));
        ys.push_back(std::log(t));
    }
    if (xs.size() < 4) {
        std::string msg = "scaling fit needs >= 4 uncensored points, got " + std::to_string(xs.size());
        if (!censored.empty()) {
            msg += "; censored kappa:";
            std::ostringstream os;
            for (double k : censored) os << ' ' << k;
            msg += os.str();
        }
        throw FitError(msg, censored);
    }
    const LinearFit lf = ols_fit(xs, ys);
    return {lf.slope, lf.intercept, lf.residual_rms, lf.slope_ci_halfwidth, log_correction, std::exp(lf.intercept),
            predicted, lf.n};
}

/// Mixing time per kappa (in kappa order) and the log-log fit. A FitError is
/// thrown when fewer than 4 points are uncensored; `rows` are still reported
/// through the optional out-parameter.
inline SweepResult sweep_and_fit(const ExperimentSpec& spec, std::vector<MixingTime>* rows_out = nullptr) {
    validate(spec, true);
    SweepResult result;
    result.predicted_slope = predicted_slope(spec);
    for (double kappa : spec.kappas) result.rows.push_back(measure_mixing_time(spec, kappa));
    if (rows_out) *rows_out = result.rows;
    const double q = std::holds_alternative<flow::Circular>(spec.flow) ? std::get<flow::Circular>(spec.flow).q : 1.0;
    bool correct = log_correction_enabled(spec);
    if (spec.synthetic && spec.log_correction == LogCorrection::Auto) correct = spec.synthetic->log_q.has_value();
    const double q_corr = spec.synthetic && spec.synthetic->log_q ? *spec.synthetic->log_q : q;
    result.fit = fit_mixing_times(result.rows, correct, q_corr, result.predicted_slope);
    return result;
}

// ---------------------------------------------------------------------------
// Variance bound (critical shear)
// ---------------------------------------------------------------------------

struct VarianceBoundRow {
    double t = 0.0;
    double measured = 0.0;  ///< int_{Omega_kappa} Var(rho0(X_{t,0}(x))) dx
    double measured_se = 0.0;
    double bracket = 0.0;  ///< ||rho0||^2 (kt + (k^{n/(n+2)} t)^2 + (k^{n/(n+2)} t)^{n+2})
    double bound = 0.0;    ///< fitted_c * bracket
};

struct VarianceBoundReport {
    double kappa = 0.0;
    double fitted_c = 0.0;
    bool ratio_monotone = true;  ///< measured / bracket non-increasing along the ladder
    std::vector<VarianceBoundRow> rows;
};

inline double variance_bracket(double kappa, double n, double t) {
    const double a = std::pow(kappa, n / (n + 2.0)) * t;
    return kappa * t + a * a + std::pow(a, n + 2.0);
}

/// Measured strip-restricted variance against the critical-shear bracket on a
/// time ladder. Monte Carlo over Omega_kappa = T x [-2 kappa^beta, 2 kappa^beta].
inline VarianceBoundReport variance_bound_report(const ExperimentSpec& spec, double kappa,
                                                 const std::vector<double>& t_ladder) {
    const auto fam = family_of(spec);
    if (fam != Family::CriticalShear) throw UnsupportedVariant("variance_bound_report requires a critical shear flow");
    const double n = family_params(spec).n;
    const InitialData init = build_initial_data(InitialKind::TentShear, spec.flow, kappa, spec.beta);
    const double norm0 = init.exact_norm_sq();
    const Quadrature domain =
        box_quadrature(spec.res.mc_nx, spec.res.mc_ny, 0.0, kTwoPi, -2.0 * init.scale, 2.0 * init.scale);

    VarianceBoundReport rep;
    rep.kappa = kappa;
    std::vector<double> positive;
    for (double t : t_ladder) positive.push_back(t);
    std::sort(positive.begin(), positive.end());
    const double t_max = positive.empty() ? 0.0 : positive.back();

    std::vector<IntegratedVariance> series;
    std::vector<double> times;
    if (t_max > 0.0) {
        SdeConfig cfg;
        cfg.t_final = t_max;
        cfg.dt = spec.res.dt > 0.0 ? std::min(spec.res.dt, t_max)
                                   : std::min(t_max, characteristic_time(spec, init) / spec.res.steps_per_timescale);
        cfg.noise = spec.noise;
        const StepLadder ladder = make_ladder(cfg.dt, cfg.t_final);
        std::vector<std::uint64_t> steps;
        for (double t : positive) {
            if (t <= 0.0) continue;
            auto k = static_cast<std::uint64_t>(std::llround(t / cfg.dt));
            k = std::clamp<std::uint64_t>(k, 1, ladder.steps) - 1;
            if (steps.empty() || steps.back() != k) steps.push_back(k);
        }
        series = integrated_variance_ladder(init, spec.flow, spec.diffusivity(kappa), domain, cfg, spec.res.mc_samples,
                                            mix_seed(spec.seed, 0xB0B0ull), steps, spec.threads);
    }
    std::size_t s = 0;
    for (double t : positive) {
        VarianceBoundRow row;
        row.t = t;
        row.bracket = norm0 * variance_bracket(kappa, n, t);
        if (t > 0.0 && s < series.size()) {
            row.t = series[s].time;
            row.bracket = norm0 * variance_bracket(kappa, n, row.t);
            row.measured = 2.0 * series[s].value;
            row.measured_se = 2.0 * series[s].standard_error;
            ++s;
        }
        rep.rows.push_back(row);
    }
    double prev_ratio = std::numeric_limits<double>::infinity();
    for (const auto& row : rep.rows) {
        if (row.bracket <= 0.0) continue;
        const double ratio = row.measured / row.bracket;
        rep.fitted_c = std::max(rep.fitted_c, ratio);
        if (ratio > prev_ratio * (1.0 + 1e-12)) rep.ratio_monotone = false;
        prev_ratio = ratio;
    }
    for (auto& row : rep.rows) row.bound = rep.fitted_c * row.bracket;
    return rep;
}

// ---------------------------------------------------------------------------
// Hoelder functional scaling
// ---------------------------------------------------------------------------

struct HolderScalingRow {
    double kappa = 0.0;
    double t = 0.0;
    double measured = 0.0;
    double measured_se = 0.0;
    double bracket = 0.0;  ///< kappa^{alpha/(alpha+2)} t
};

struct HolderScalingReport {
    double fitted_c = 0.0;       ///< geometric mean of measured / bracket
    double max_deviation = 1.0;  ///< max over rows of max(r/C, C/r)
    std::vector<HolderScalingRow> rows;
};

/// Shear-increment functional at t = kappa^{-alpha/(alpha+2)} (centred at y)
/// against kappa^{alpha/(alpha+2)} t with a single fitted constant.
inline HolderScalingReport holder_functional_scaling(const VelocityField& field, const std::vector<double>& kappas,
                                                     double y, std::size_t steps, std::size_t n_pairs,
                                                     std::uint64_t seed, unsigned threads = 1) {
    const auto* h = std::get_if<flow::HolderShear>(&field);
    if (!h) throw UnsupportedVariant("holder_functional_scaling requires a HolderShear field");
    const double e = h->alpha / (h->alpha + 2.0);
    HolderScalingReport rep;
    double log_sum = 0.0;
    for (std::size_t i = 0; i < kappas.size(); ++i) {
        const double kappa = kappas[i];
        const double t = std::pow(kappa, -e);
        SdeConfig cfg;
        cfg.t_final = t;
        cfg.dt = t / static_cast<double>(steps);
        const auto est = shear_increment_functional(field, kappa, y, cfg, n_pairs, mix_seed(seed, i), threads);
        HolderScalingRow row{kappa, t, est.value, est.standard_error, std::pow(kappa, e) * t};
        log_sum += std::log(row.measured / row.bracket);
        rep.rows.push_back(row);
    }
    rep.fitted_c = std::exp(log_sum / static_cast<double>(rep.rows.size()));
    for (const auto& row : rep.rows) {
        const double r = row.measured / row.bracket;
        rep.max_deviation = std::max(rep.max_deviation, std::max(r / rep.fitted_c, rep.fitted_c / r));
    }
    return rep;
}

}  // namespace enhdiff
