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
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

#include "error.hpp"
#include "flows.hpp"
#include "grid.hpp"

namespace enhdiff {

/// Cosine regularized delta, delta_eps(r) = (1 + cos(pi r / eps)) / (2 eps)
/// on |r| <= eps. The 2D kernel is the tensor product.
struct RegularizedDelta {
    double epsilon = 0.0;
};

inline double delta_eval(const RegularizedDelta& d, double r) noexcept {
    const double a = std::abs(r);
    if (a >= d.epsilon) return 0.0;
    return (1.0 + std::cos(std::numbers::pi * a / d.epsilon)) / (2.0 * d.epsilon);
}

inline double delta_eval(const RegularizedDelta& d, Vec2 r) noexcept { return delta_eval(d, r.x) * delta_eval(d, r.y); }

/// Kernel whose half-width is `cells` grid spacings in the coarser direction.
inline RegularizedDelta delta_for_grid(const CartesianGrid& g, double cells = 2.0) {
    return {cells * std::max(g.dx(), g.dy())};
}

/// Immersed interface: ordered markers with arc-length weights.
struct Interface {
    std::vector<Vec2> markers;
    std::vector<double> weights;

    std::size_t size() const noexcept { return markers.size(); }
    double measure() const noexcept {
        double m = 0.0;
        for (double w : weights) m += w;
        return m;
    }
};

/// Closed circle of `n` equally spaced markers.
inline Interface circle_interface(Vec2 center, double radius, std::size_t n) {
    Interface iface;
    const double ds = 2.0 * std::numbers::pi * radius / static_cast<double>(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double th = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
        iface.markers.push_back({center.x + radius * std::cos(th), center.y + radius * std::sin(th)});
        iface.weights.push_back(ds);
    }
    return iface;
}

namespace detail {

/// Visits every node within the kernel support of X as (flat index, weight),
/// with weight = delta(x_node - X) (minimum-image offsets when periodic).
template <class Visit>
void for_each_stencil_node(const CartesianGrid& g, const RegularizedDelta& d, Vec2 X, bool periodic, Visit&& visit) {
    const double dx = g.dx(), dy = g.dy();
    const double lx = kTwoPi, y0 = -g.ly, ly2 = 2.0 * g.ly;
    if (!periodic) {
        if (X.x - d.epsilon < 0.0 || X.x + d.epsilon > lx || X.y - d.epsilon < y0 || X.y + d.epsilon > y0 + ly2)
            throw GeometryError("interface marker within epsilon of the domain seam");
    }
    const auto nx = static_cast<std::ptrdiff_t>(g.nx);
    const auto ny = static_cast<std::ptrdiff_t>(g.ny);
    const auto i_lo = static_cast<std::ptrdiff_t>(std::ceil((X.x - d.epsilon) / dx));
    const auto i_hi = static_cast<std::ptrdiff_t>(std::floor((X.x + d.epsilon) / dx));
    const auto j_lo = static_cast<std::ptrdiff_t>(std::ceil((X.y - y0 - d.epsilon) / dy));
    const auto j_hi = static_cast<std::ptrdiff_t>(std::floor((X.y - y0 + d.epsilon) / dy));
    for (std::ptrdiff_t jj = j_lo; jj <= j_hi; ++jj) {
        const double wy = delta_eval(d, y0 + static_cast<double>(jj) * dy - X.y);
        if (wy == 0.0) continue;
        const auto j = static_cast<std::size_t>(((jj % ny) + ny) % ny);
        for (std::ptrdiff_t ii = i_lo; ii <= i_hi; ++ii) {
            const double wx = delta_eval(d, static_cast<double>(ii) * dx - X.x);
            if (wx == 0.0) continue;
            const auto i = static_cast<std::size_t>(((ii % nx) + nx) % nx);
            visit(g.index(i, j), wx * wy);
        }
    }
}

inline void check_resolution(const CartesianGrid& g, const RegularizedDelta& d) {
    if (!(d.epsilon >= 2.0 * std::max(g.dx(), g.dy()) * (1.0 - 1e-12)))
        throw GeometryError("regularized delta under-resolved: need epsilon >= 2 max(dx, dy)");
}

}  // namespace detail

/// rho_Gamma(X_k) = sum_nodes delta_eps(x_node - X_k) rho(x_node) dx dy.
inline std::vector<double> interface_sample(const CartesianField& f, const Interface& iface,
                                            const RegularizedDelta& d, bool periodic = true) {
    const CartesianGrid& g = f.grid;
    detail::check_resolution(g, d);
    const double cell = g.dx() * g.dy();
    std::vector<double> out(iface.size(), 0.0);
    for (std::size_t k = 0; k < iface.size(); ++k) {
        double acc = 0.0;
        detail::for_each_stencil_node(g, d, iface.markers[k], periodic,
                                      [&](std::size_t idx, double w) { acc += w * f.values[idx]; });
        out[k] = acc * cell;
    }
    return out;
}

/// Adjoint of interface_sample: F(x_node) = sum_k delta_eps(x_node - X_k) v_k dS_k.
inline CartesianField spread(std::span<const double> values, const Interface& iface, const RegularizedDelta& d,
                             const CartesianGrid& g, bool periodic = true) {
    if (values.size() != iface.size()) throw GeometryError("spread: one value per marker required");
    validate(g);
    detail::check_resolution(g, d);
    CartesianField out{g, std::vector<double>(g.size(), 0.0), 0.0};
    for (std::size_t k = 0; k < iface.size(); ++k) {
        const double amp = values[k] * iface.weights[k];
        detail::for_each_stencil_node(g, d, iface.markers[k], periodic,
                                      [&](std::size_t idx, double w) { out.values[idx] += w * amp; });
    }
    return out;
}

/// sum_nodes delta_eps(x_node - X) dx dy; equals 1 when epsilon is an integer
/// number of cells in each direction.
inline double discrete_kernel_mass(const CartesianGrid& g, const RegularizedDelta& d, Vec2 X) {
    double acc = 0.0;
    detail::for_each_stencil_node(g, d, X, true, [&](std::size_t, double w) { acc += w; });
    return acc * g.dx() * g.dy();
}

}  // namespace enhdiff
