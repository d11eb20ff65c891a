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
#include "stochastic.hpp"

namespace enhdiff {

struct PointEstimate {
    double mean = 0.0;
    double standard_error = 0.0;
    std::size_t n_samples = 0;
};

struct VarianceEstimate {
    double variance = 0.0;
    double standard_error = 0.0;
};

/// Quadrature nodes and weights covering a domain.
struct Quadrature {
    std::vector<Vec2> nodes;
    std::vector<double> weights;

    std::size_t size() const noexcept { return nodes.size(); }
    double measure() const noexcept {
        double m = 0.0;
        for (double w : weights) m += w;
        return m;
    }
};

/// Midpoint rule on [x0,x1) x [y0,y1); spectrally accurate for periodic integrands.
inline Quadrature box_quadrature(std::size_t nx, std::size_t ny, double x0, double x1, double y0, double y1) {
    if (nx == 0 || ny == 0) throw ConfigError("box_quadrature: empty grid");
    Quadrature q;
    const double hx = (x1 - x0) / static_cast<double>(nx);
    const double hy = (y1 - y0) / static_cast<double>(ny);
    for (std::size_t j = 0; j < ny; ++j)
        for (std::size_t i = 0; i < nx; ++i) {
            q.nodes.push_back({x0 + (static_cast<double>(i) + 0.5) * hx, y0 + (static_cast<double>(j) + 0.5) * hy});
            q.weights.push_back(hx * hy);
        }
    return q;
}

/// Midpoint rule on the annulus [r0, r1] x [0, 2 pi) with weights r dr dtheta;
/// nodes are returned in Cartesian coordinates.
inline Quadrature annulus_quadrature(std::size_t nr, std::size_t ntheta, double r0, double r1) {
    if (nr == 0 || ntheta == 0) throw ConfigError("annulus_quadrature: empty grid");
    Quadrature q;
    const double hr = (r1 - r0) / static_cast<double>(nr);
    const double ht = 2.0 * std::numbers::pi / static_cast<double>(ntheta);
    for (std::size_t i = 0; i < nr; ++i) {
        const double r = r0 + (static_cast<double>(i) + 0.5) * hr;
        for (std::size_t j = 0; j < ntheta; ++j) {
            const double th = (static_cast<double>(j) + 0.5) * ht;
            q.nodes.push_back({r * std::cos(th), r * std::sin(th)});
            q.weights.push_back(r * hr * ht);
        }
    }
    return q;
}

/// Copy of cfg integrating the backward process (drift -u).
inline SdeConfig backward(SdeConfig cfg) {
    cfg.direction = Direction::Backward;
    return cfg;
}

/// Ensemble of backward endpoints X_{t,0}(x); feed it to estimate_density.
inline TrajectoryEnsemble feynman_kac_ensemble(const VelocityField& field, const DiffusivityModel& diff, Vec2 x,
                                               const SdeConfig& cfg, std::uint64_t base_seed, std::size_t n_samples,
                                               unsigned threads = 1) {
    return simulate_ensemble(field, diff, x, backward(cfg), base_seed, n_samples, threads);
}

namespace detail {
template <class Rho0>
std::vector<double> sample_values(const Rho0& rho0, const TrajectoryEnsemble& ensemble) {
    std::vector<double> v;
    v.reserve(ensemble.terminal_points.size());
    for (const Vec2& p : ensemble.terminal_points) v.push_back(rho0(p));
    return v;
}

inline VarianceEstimate variance_of(std::span<const double> values) {
    const SampleStats s = sample_stats(values);
    return {std::max(0.0, s.variance), s.variance_se};
}
}  // namespace detail

/// rho(t, x) = E[rho0(X_{t,0}(x))].
template <class Rho0>
PointEstimate estimate_density(const Rho0& rho0, const TrajectoryEnsemble& ensemble) {
    if (ensemble.terminal_points.empty()) throw EstimatorError("estimate_density: empty ensemble");
    const auto values = detail::sample_values(rho0, ensemble);
    const SampleStats s = sample_stats(values);
    return {s.mean, s.standard_error, s.n};
}

/// Unbiased sample variance of rho0(X_{t,0}(x)); negative round-off clipped to 0.
template <class Rho0>
VarianceEstimate estimate_variance(const Rho0& rho0, const TrajectoryEnsemble& ensemble) {
    if (ensemble.terminal_points.size() < 2) throw EstimatorError("estimate_variance: need at least 2 samples");
    return detail::variance_of(detail::sample_values(rho0, ensemble));
}

struct IntegratedVariance {
    double time = 0.0;
    double value = 0.0;
    double standard_error = 0.0;
};

/// 1/2 sum_i w_i Var(rho0(X_{t,0}(x_i))), which equals the accumulated
/// dissipation kappa int_0^t ||grad rho||^2 ds of the exact dynamics. Node i
/// uses the ensemble rooted at mix_seed(seed, i).
template <class Rho0>
IntegratedVariance integrated_variance(const Rho0& rho0, const VelocityField& field,
                                       const DiffusivityModel& diff, const Quadrature& domain,
                                       const SdeConfig& cfg, std::size_t n_samples, std::uint64_t seed,
                                       unsigned threads = 1) {
    if (domain.size() == 0) throw EstimatorError("integrated_variance: empty quadrature grid");
    if (n_samples < 2) throw EstimatorError("integrated_variance: need at least 2 samples per node");
    validate(cfg);
    const SdeConfig bcfg = backward(cfg);
    std::vector<double> values(domain.size() * n_samples);
    parallel_for(values.size(), threads, [&](std::size_t idx) {
        const std::size_t node = idx / n_samples;
        const std::size_t sample = idx % n_samples;
        const Vec2 end = simulate_trajectory(field, diff, domain.nodes[node], bcfg,
                                             mix_seed(mix_seed(seed, node), sample));
        values[idx] = rho0(end);
    });
    double total = 0.0, var_se = 0.0;
    for (std::size_t node = 0; node < domain.size(); ++node) {
        const auto v = detail::variance_of(std::span<const double>(values).subspan(node * n_samples, n_samples));
        total += domain.weights[node] * v.variance;
        var_se += domain.weights[node] * domain.weights[node] * v.standard_error * v.standard_error;
    }
    return {cfg.t_final, 0.5 * total, 0.5 * std::sqrt(var_se)};
}

/// integrated_variance evaluated along the step ladder of cfg at each step
/// index in `snapshot_steps`, reusing one set of trajectories.
template <class Rho0>
std::vector<IntegratedVariance> integrated_variance_ladder(const Rho0& rho0, const VelocityField& field,
                                                           const DiffusivityModel& diff,
                                                           const Quadrature& domain, const SdeConfig& cfg,
                                                           std::size_t n_samples, std::uint64_t seed,
                                                           const std::vector<std::uint64_t>& snapshot_steps,
                                                           unsigned threads = 1) {
    if (domain.size() == 0) throw EstimatorError("integrated_variance: empty quadrature grid");
    if (n_samples < 2) throw EstimatorError("integrated_variance: need at least 2 samples per node");
    validate(cfg);
    const SdeConfig bcfg = backward(cfg);
    const std::size_t m = snapshot_steps.size();
    const StepLadder ladder = make_ladder(cfg.dt, cfg.t_final);
    // [node][snapshot][sample]
    std::vector<double> values(domain.size() * m * n_samples);
    parallel_for(domain.size() * n_samples, threads, [&](std::size_t idx) {
        const std::size_t node = idx / n_samples;
        const std::size_t sample = idx % n_samples;
        const NormalStream noise(mix_seed(mix_seed(seed, node), sample));
        std::size_t next = 0;
        detail::integrate_path(field, diff, domain.nodes[node], bcfg, noise, 0,
                               [&](std::uint64_t k, double, Vec2 x) {
                                   while (next < m && snapshot_steps[next] == k) {
                                       values[(node * m + next) * n_samples + sample] =
                                           rho0(wrap_position(field, bcfg, x));
                                       ++next;
                                   }
                               });
    });
    std::vector<IntegratedVariance> out(m);
    for (std::size_t s = 0; s < m; ++s) {
        double total = 0.0, var_se = 0.0;
        for (std::size_t node = 0; node < domain.size(); ++node) {
            const auto v = detail::variance_of(
                std::span<const double>(values).subspan((node * m + s) * n_samples, n_samples));
            total += domain.weights[node] * v.variance;
            var_se += domain.weights[node] * domain.weights[node] * v.standard_error * v.standard_error;
        }
        out[s] = {ladder.time_after(snapshot_steps[s]), 0.5 * total, 0.5 * std::sqrt(var_se)};
    }
    return out;
}

/// Terms of the variance chain Var <= E[f^2] - E[f]^2 <= E[f^2] with f = rho0(X).
struct VarianceChain {
    double variance = 0.0;
    double second_moment = 0.0;
    double squared_mean = 0.0;
    bool ordered = false;  ///< variance <= second_moment (up to round-off)
};

template <class Rho0>
VarianceChain variance_chain(const Rho0& rho0, const TrajectoryEnsemble& ensemble) {
    if (ensemble.terminal_points.size() < 2) throw EstimatorError("variance_chain: need at least 2 samples");
    const auto values = detail::sample_values(rho0, ensemble);
    const SampleStats s = sample_stats(values);
    double m2 = 0.0;
    for (double v : values) m2 += v * v;
    m2 /= static_cast<double>(values.size());
    // biased variance so that the chain is an identity up to round-off
    const double var = std::max(0.0, m2 - s.mean * s.mean);
    return {var, m2, s.mean * s.mean, var <= m2 * (1.0 + 1e-12)};
}

/// Both sides of kappa int ||grad rho||^2 <= C ||grad rho0||_inf^2 int int E|X(x)-X(y)|^2 dy dx.
/// The constant C is never assumed; it is reported as left / right.
struct SeparationBound {
    double dissipation = 0.0;
    double dissipation_se = 0.0;
    double separation_integral = 0.0;
    double fitted_c = 0.0;
};

template <class Rho0>
SeparationBound separation_bound(const Rho0& rho0, double grad_rho0_sup, const VelocityField& field,
                                 const DiffusivityModel& diff, const Quadrature& domain, const SdeConfig& cfg,
                                 Coupling coupling, std::size_t n_samples, std::uint64_t seed,
                                 unsigned threads = 1) {
    const IntegratedVariance left = integrated_variance(rho0, field, diff, domain, cfg, n_samples, seed, threads);
    const std::size_t m = domain.size();
    std::vector<double> pair_values(m * m, 0.0);
    parallel_for(m * m, threads, [&](std::size_t idx) {
        const std::size_t i = idx / m;
        const std::size_t j = idx % m;
        if (i == j && coupling == Coupling::CommonNoise) return;
        pair_values[idx] = two_point_separation(field, diff, domain.nodes[i], domain.nodes[j], backward(cfg), coupling,
                                                n_samples, mix_seed(seed ^ 0x5EBA7A7E5ull, idx))
                               .value *
                           domain.weights[i] * domain.weights[j];
    });
    double right = 0.0;
    for (double v : pair_values) right += v;
    right *= grad_rho0_sup * grad_rho0_sup;
    return {left.value, left.standard_error, right, right > 0.0 ? left.value / right : 0.0};
}

}  // namespace enhdiff
