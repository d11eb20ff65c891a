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

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "error.hpp"
#include "flows.hpp"
#include "parallel.hpp"
#include "rng.hpp"
#include "stats.hpp"

namespace enhdiff {

/// Noise amplitude convention of the Euler-Maruyama update. Only SqrtTwoKappa
/// solves the advection-diffusion equation; TwoKappa exists so the validation
/// suite can prove it detects a wrong amplitude.
enum class NoiseConvention { SqrtTwoKappa, TwoKappa };

/// Forward integrates dX = u ds + sqrt(2 kappa) dB as written. Backward
/// integrates the characteristic of the backward process X_{t,s}(x) from s = t
/// down to s = 0, i.e. with drift -u; this is the process whose terminal law
/// represents rho(t, x) = E[rho0(X_{t,0}(x))] for d_t rho + u . grad rho = kappa Lap rho.
enum class Direction { Forward, Backward };

struct SdeConfig {
    double dt = 1e-2;
    double t_final = 1.0;
    NoiseConvention noise = NoiseConvention::SqrtTwoKappa;
    Direction direction = Direction::Forward;
    /// Period used to wrap x in reported positions (0 disables). Circular flows never wrap.
    double x_period = 2.0 * std::numbers::pi;
    /// Inner reflecting radius for circular flows.
    double r_min = 1e-6;
};

inline void validate(const SdeConfig& cfg) {
    if (!(cfg.dt > 0.0) || !std::isfinite(cfg.dt)) throw ConfigError("sde: dt must be > 0");
    if (!(cfg.t_final > 0.0) || !std::isfinite(cfg.t_final)) throw ConfigError("sde: t_final must be > 0");
    if (cfg.dt > cfg.t_final) throw ConfigError("sde: dt must not exceed t_final");
}

/// Uniform step ladder covering [0, t_final]; the last step is shortened so the
/// steps sum to t_final exactly.
struct StepLadder {
    std::uint64_t steps = 0;
    double dt = 0.0;
    double last = 0.0;

    double length(std::uint64_t k) const noexcept { return k + 1 == steps ? last : dt; }
    double time_after(std::uint64_t k) const noexcept {
        return k + 1 == steps ? static_cast<double>(k) * dt + last : static_cast<double>(k + 1) * dt;
    }
};

inline StepLadder make_ladder(double dt, double t_final) {
    auto steps = static_cast<std::uint64_t>(std::ceil(t_final / dt));
    if (steps == 0) steps = 1;
    while (steps > 1 && static_cast<double>(steps - 1) * dt >= t_final) --steps;
    const double last = t_final - static_cast<double>(steps - 1) * dt;
    return {steps, dt, last};
}

inline double noise_amplitude(NoiseConvention c, double local_kappa) {
    return c == NoiseConvention::SqrtTwoKappa ? std::sqrt(2.0 * local_kappa) : 2.0 * local_kappa;
}

inline double wrap_periodic(double x, double period) {
    if (period <= 0.0) return x;
    double w = std::fmod(x, period);
    if (w < 0.0) w += period;
    return w;
}

namespace detail {

/// Euler-Maruyama driver. `observe(k, t, X)` runs after step k with the
/// unwrapped position.
template <class Observer>
Vec2 integrate_path(const VelocityField& field, const DiffusivityModel& diff, Vec2 x0,
                    const SdeConfig& cfg, const NormalStream& noise, std::uint32_t stream,
                    Observer&& observe) {
    const bool circular = std::holds_alternative<flow::Circular>(field);
    const bool isotropic = std::holds_alternative<diffusivity::Isotropic>(diff);
    const double kappa = base_kappa(diff);
    const StepLadder ladder = make_ladder(cfg.dt, cfg.t_final);
    const double sign = cfg.direction == Direction::Backward ? -1.0 : 1.0;
    Vec2 x = x0;
    for (std::uint64_t k = 0; k < ladder.steps; ++k) {
        const double h = ladder.length(k);
        const Vec2 drift = sign * eval_velocity(field, x);
        const double local = isotropic ? kappa : eval_diffusivity(diff, x);
        Vec2 next = x + h * drift;
        if (local > 0.0) {
            const auto xi = noise.draw(k, stream);
            const double amp = noise_amplitude(cfg.noise, local) * std::sqrt(h);
            next = next + amp * Vec2{xi[0], xi[1]};
        }
        if (circular) {
            const double r = std::hypot(next.x, next.y);
            if (r < cfg.r_min) {
                if (r == 0.0) {
                    const double r_old = std::hypot(x.x, x.y);
                    next = (cfg.r_min / r_old) * x;
                } else {
                    next = ((2.0 * cfg.r_min - r) / r) * next;
                }
            }
        }
        x = next;
        observe(k, ladder.time_after(k), x);
    }
    return x;
}

}  // namespace detail

inline Vec2 wrap_position(const VelocityField& field, const SdeConfig& cfg, Vec2 x) {
    if (std::holds_alternative<flow::Circular>(field)) return x;
    return {wrap_periodic(x.x, cfg.x_period), x.y};
}

/// Euler-Maruyama endpoint of the autonomous SDE dX = +-u(X) ds + sqrt(2 kappa) dB
/// over [0, t_final], drift sign set by cfg.direction.
inline Vec2 simulate_trajectory(const VelocityField& field, const DiffusivityModel& diff, Vec2 x0,
                                const SdeConfig& cfg, std::uint64_t seed) {
    validate(cfg);
    const NormalStream noise(seed);
    const Vec2 end = detail::integrate_path(field, diff, x0, cfg, noise, 0, [](auto, auto, auto) {});
    return wrap_position(field, cfg, end);
}

struct TrajectoryEnsemble {
    Vec2 start_point;
    std::vector<Vec2> terminal_points;
    std::uint64_t base_seed = 0;
    std::size_t n_samples = 0;
};

inline TrajectoryEnsemble simulate_ensemble(const VelocityField& field, const DiffusivityModel& diff,
                                            Vec2 x0, const SdeConfig& cfg, std::uint64_t base_seed,
                                            std::size_t n_samples, unsigned threads = 1) {
    if (n_samples < 1) throw ConfigError("simulate_ensemble: n_samples must be >= 1");
    validate(cfg);
    TrajectoryEnsemble e{x0, std::vector<Vec2>(n_samples), base_seed, n_samples};
    parallel_for(n_samples, threads, [&](std::size_t i) {
        e.terminal_points[i] = simulate_trajectory(field, diff, x0, cfg, mix_seed(base_seed, i));
    });
    return e;
}

/// Positions of each sample after each step index in `snapshot_steps`
/// (ascending, within the cfg ladder). Row-major [sample][snapshot].
inline std::vector<Vec2> simulate_ensemble_snapshots(const VelocityField& field,
                                                     const DiffusivityModel& diff, Vec2 x0,
                                                     const SdeConfig& cfg, std::uint64_t base_seed,
                                                     std::size_t n_samples,
                                                     const std::vector<std::uint64_t>& snapshot_steps,
                                                     unsigned threads = 1) {
    if (n_samples < 1) throw ConfigError("simulate_ensemble: n_samples must be >= 1");
    validate(cfg);
    const std::size_t m = snapshot_steps.size();
    std::vector<Vec2> out(n_samples * m);
    parallel_for(n_samples, threads, [&](std::size_t i) {
        const NormalStream noise(mix_seed(base_seed, i));
        std::size_t next = 0;
        detail::integrate_path(field, diff, x0, cfg, noise, 0, [&](std::uint64_t k, double, Vec2 x) {
            while (next < m && snapshot_steps[next] == k) {
                out[i * m + next] = wrap_position(field, cfg, x);
                ++next;
            }
        });
    });
    return out;
}

enum class Coupling { IndependentNoise, CommonNoise };

struct SeparationEstimate {
    double value = 0.0;
    double standard_error = 0.0;
    std::size_t n_pairs = 0;
    Coupling coupling = Coupling::IndependentNoise;
};

/// Monte Carlo estimate of E|X_{t,0}(x) - X_{t,0}(y)|^2 on unwrapped positions.
inline SeparationEstimate two_point_separation(const VelocityField& field, const DiffusivityModel& diff,
                                               Vec2 x, Vec2 y, const SdeConfig& cfg, Coupling coupling,
                                               std::size_t n_pairs, std::uint64_t seed,
                                               unsigned threads = 1) {
    if (n_pairs < 1) throw ConfigError("two_point_separation: n_pairs must be >= 1");
    validate(cfg);
    std::vector<double> sq(n_pairs);
    const std::uint32_t second_stream = coupling == Coupling::CommonNoise ? 0u : 1u;
    parallel_for(n_pairs, threads, [&](std::size_t i) {
        const NormalStream noise(mix_seed(seed, i));
        const auto none = [](auto, auto, auto) {};
        const Vec2 a = detail::integrate_path(field, diff, x, cfg, noise, 0, none);
        const Vec2 b = detail::integrate_path(field, diff, y, cfg, noise, second_stream, none);
        sq[i] = norm2(a - b);
    });
    const SampleStats s = sample_stats(sq);
    return {s.mean, s.standard_error, n_pairs, coupling};
}

/// E_{1,2} | int_0^t (u(y + sqrt(2k) W1) - u(y + sqrt(2k) W2)) dtau |^2 for a
/// shear profile u, with two independent scalar Brownian motions and a
/// left-endpoint Riemann sum on the cfg step ladder.
inline SeparationEstimate shear_increment_functional(const VelocityField& field, double kappa, double y,
                                                     const SdeConfig& cfg, std::size_t n_pairs,
                                                     std::uint64_t seed, unsigned threads = 1) {
    if (!is_shear(field))
        throw UnsupportedVariant("shear_increment_functional requires a shear field, got " + flow_name(field));
    if (n_pairs < 1) throw ConfigError("shear_increment_functional: n_pairs must be >= 1");
    if (!(kappa >= 0.0)) throw ConfigError("shear_increment_functional: kappa must be >= 0");
    validate(cfg);
    const StepLadder ladder = make_ladder(cfg.dt, cfg.t_final);
    const double amp = noise_amplitude(cfg.noise, kappa);
    std::vector<double> values(n_pairs);
    parallel_for(n_pairs, threads, [&](std::size_t i) {
        const NormalStream noise(mix_seed(seed, i));
        double w1 = 0.0, w2 = 0.0, integral = 0.0;
        for (std::uint64_t k = 0; k < ladder.steps; ++k) {
            const double h = ladder.length(k);
            integral += (shear_profile(field, y + amp * w1) - shear_profile(field, y + amp * w2)) * h;
            const auto xi = noise.draw(k);
            const double sh = std::sqrt(h);
            w1 += sh * xi[0];
            w2 += sh * xi[1];
        }
        values[i] = integral * integral;
    });
    const SampleStats s = sample_stats(values);
    return {s.mean, s.standard_error, n_pairs, Coupling::IndependentNoise};
}

}  // namespace enhdiff
