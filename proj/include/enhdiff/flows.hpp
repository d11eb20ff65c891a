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
#include <string>
#include <type_traits>
#include <variant>

#include "error.hpp"
#include "rng.hpp"

namespace enhdiff {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    friend constexpr Vec2 operator+(Vec2 a, Vec2 b) noexcept { return {a.x + b.x, a.y + b.y}; }
    friend constexpr Vec2 operator-(Vec2 a, Vec2 b) noexcept { return {a.x - b.x, a.y - b.y}; }
    friend constexpr Vec2 operator*(double s, Vec2 a) noexcept { return {s * a.x, s * a.y}; }
    friend constexpr bool operator==(Vec2, Vec2) = default;
};

inline double norm2(Vec2 v) noexcept { return v.x * v.x + v.y * v.y; }

// ---------------------------------------------------------------------------
// Velocity fields
// ---------------------------------------------------------------------------

namespace flow {
struct Zero {};
/// u = (y^n, 0): critical point of order n at y = 0.
struct PowerShear {
    int n = 1;
};
/// u = (c sign(y) |y|^alpha, 0).
struct HolderShear {
    double alpha = 1.0;
    double c = 1.0;
};
/// Angular speed r^q; in Cartesian coordinates u = r^q (-y, x).
struct Circular {
    double q = 1.0;
};
/// u = (s y, 0).
struct ConstantShear {
    double s = 1.0;
};
}  // namespace flow

using VelocityField =
    std::variant<flow::Zero, flow::PowerShear, flow::HolderShear, flow::Circular, flow::ConstantShear>;

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

inline std::string flow_name(const VelocityField& field) {
    return std::visit(Overloaded{[](flow::Zero) { return std::string("zero"); },
                                 [](flow::PowerShear) { return std::string("power_shear"); },
                                 [](flow::HolderShear) { return std::string("holder_shear"); },
                                 [](flow::Circular) { return std::string("circular"); },
                                 [](flow::ConstantShear) { return std::string("constant_shear"); }},
                      field);
}

/// Throws ConfigError when parameters are outside their documented ranges.
inline void validate(const VelocityField& field) {
    std::visit(Overloaded{[](flow::Zero) {},
                          [](flow::PowerShear f) {
                              if (f.n < 1) throw ConfigError("flow.n must be an integer >= 1");
                          },
                          [](flow::HolderShear f) {
                              if (!(f.alpha > 0.0 && f.alpha <= 1.0))
                                  throw ConfigError("flow.alpha must lie in (0, 1]");
                              if (!(f.c > 0.0)) throw ConfigError("flow.c must be > 0");
                          },
                          [](flow::Circular f) {
                              if (!(f.q > 0.0)) throw ConfigError("flow.q must be > 0");
                          },
                          [](flow::ConstantShear f) {
                              if (!std::isfinite(f.s)) throw ConfigError("flow.s must be finite");
                          }},
               field);
}

/// True for the variants whose velocity is (u(y), 0).
inline bool is_shear(const VelocityField& field) noexcept {
    return std::holds_alternative<flow::PowerShear>(field) ||
           std::holds_alternative<flow::HolderShear>(field) ||
           std::holds_alternative<flow::ConstantShear>(field) ||
           std::holds_alternative<flow::Zero>(field);
}

/// Profile u(y) of a shear variant (Zero counts as the trivial shear).
inline double shear_profile(const VelocityField& field, double y) {
    return std::visit(
        Overloaded{[](flow::Zero) { return 0.0; },
                   [y](flow::PowerShear f) {
                       double v = 1.0;
                       for (int j = 0; j < f.n; ++j) v *= y;
                       return v;
                   },
                   [y](flow::HolderShear f) {
                       if (y == 0.0) return 0.0;
                       const double mag = f.c * std::pow(std::abs(y), f.alpha);
                       return y > 0.0 ? mag : -mag;
                   },
                   [y](flow::ConstantShear f) { return f.s * y; },
                   [](flow::Circular) -> double {
                       throw UnsupportedVariant("circular flow has no shear profile");
                   }},
        field);
}

inline double angular_speed(flow::Circular f, double r) {
    if (!(r > 0.0)) throw DomainError("circular flow evaluated at r <= 0");
    return std::pow(r, f.q);
}

/// Exact velocity at a Cartesian point.
inline Vec2 eval_velocity(const VelocityField& field, Vec2 p) {
    if (const auto* c = std::get_if<flow::Circular>(&field)) {
        const double omega = angular_speed(*c, std::hypot(p.x, p.y));
        return {-omega * p.y, omega * p.x};
    }
    return {shear_profile(field, p.y), 0.0};
}

/// Sharp Hoelder constant of c sign(y)|y|^alpha over the whole line: c 2^(1-alpha),
/// attained by pairs symmetric about the origin.
inline double sharp_holder_constant(flow::HolderShear f) { return f.c * std::pow(2.0, 1.0 - f.alpha); }

struct HolderCheck {
    double max_ratio = 0.0;
    bool holds = false;
};

/// Max of |u(y)-u(y')| / |y-y'|^alpha over `samples` random pairs in [y_lo, y_hi].
/// `holds` compares against the field's nominal constant c.
inline HolderCheck verify_holder(const VelocityField& field, double y_lo, double y_hi,
                                 std::uint64_t samples, std::uint64_t seed) {
    const auto* h = std::get_if<flow::HolderShear>(&field);
    if (!h) throw UnsupportedVariant("verify_holder requires a HolderShear field, got " + flow_name(field));
    if (samples < 2) throw ConfigError("verify_holder needs at least 2 samples");
    if (!(y_hi > y_lo)) throw ConfigError("verify_holder needs y_lo < y_hi");

    const NormalStream stream(seed);
    double max_ratio = 0.0;
    for (std::uint64_t i = 0; i < samples; ++i) {
        const auto [a, b] = stream.uniform(i);
        const double y1 = y_lo + (y_hi - y_lo) * a;
        const double y2 = y_lo + (y_hi - y_lo) * b;
        if (y1 == y2) continue;
        const double ratio = std::abs(shear_profile(field, y1) - shear_profile(field, y2)) /
                             std::pow(std::abs(y1 - y2), h->alpha);
        max_ratio = std::max(max_ratio, ratio);
    }
    return {max_ratio, max_ratio <= h->c * (1.0 + 1e-12)};
}

// ---------------------------------------------------------------------------
// Diffusivity models
// ---------------------------------------------------------------------------

namespace diffusivity {
struct Isotropic {
    double kappa = 0.0;
};
/// Local diffusivity kappa r^gamma (polar domains only).
struct AnisotropicRadial {
    double kappa = 0.0;
    double gamma = 0.0;
};
}  // namespace diffusivity

using DiffusivityModel = std::variant<diffusivity::Isotropic, diffusivity::AnisotropicRadial>;

inline double base_kappa(const DiffusivityModel& model) noexcept {
    return std::visit([](auto m) { return m.kappa; }, model);
}

inline double anisotropy_exponent(const DiffusivityModel& model) noexcept {
    if (const auto* a = std::get_if<diffusivity::AnisotropicRadial>(&model)) return a->gamma;
    return 0.0;
}

/// kappa >= 0 is accepted so that deterministic (kappa = 0) runs are expressible.
inline void validate(const DiffusivityModel& model) {
    const double kappa = base_kappa(model);
    if (!(kappa >= 0.0 && kappa < 1.0)) throw ConfigError("diffusivity.kappa must lie in [0, 1)");
    const double gamma = anisotropy_exponent(model);
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("diffusivity.gamma must lie in [0, 1]");
}

inline double eval_diffusivity_at_radius(const DiffusivityModel& model, double r) {
    return std::visit(Overloaded{[](diffusivity::Isotropic m) { return m.kappa; },
                                 [r](diffusivity::AnisotropicRadial m) {
                                     if (m.gamma == 0.0) return m.kappa;
                                     return r <= 0.0 ? 0.0 : m.kappa * std::pow(r, m.gamma);
                                 }},
                      model);
}

/// Local diffusivity at a Cartesian point (radius measured from the origin).
inline double eval_diffusivity(const DiffusivityModel& model, Vec2 p) {
    if (std::holds_alternative<diffusivity::Isotropic>(model)) return base_kappa(model);
    return eval_diffusivity_at_radius(model, std::hypot(p.x, p.y));
}

}  // namespace enhdiff
