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

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "enhdiff/ibm.hpp"

using namespace enhdiff;

namespace {
constexpr double kPi = std::numbers::pi;

// Max error of sampling a smooth field on a circle as the grid is refined at fixed epsilon.
double sample_error(std::size_t n, double epsilon) {
    const CartesianGrid g{n, n, kPi};
    const auto exact = [](Vec2 p) { return std::sin(p.x) * std::cos(0.5 * p.y) + 0.3 * p.x; };
    const auto f = make_field(g, exact);
    const auto iface = circle_interface({kPi, 0.2}, 1.0, 64);
    const auto s = interface_sample(f, iface, RegularizedDelta{epsilon}, false);
    // Reference: the same kernel applied to the continuous field.
    double err = 0.0;
    for (std::size_t k = 0; k < iface.size(); ++k) {
        const Vec2 X = iface.markers[k];
        const int m = 400;
        const double h = 2 * epsilon / m;
        double ref = 0.0;
        for (int a = 0; a < m; ++a)
            for (int b = 0; b < m; ++b) {
                const Vec2 p{X.x - epsilon + (a + 0.5) * h, X.y - epsilon + (b + 0.5) * h};
                ref += delta_eval(RegularizedDelta{epsilon}, Vec2{p.x - X.x, p.y - X.y}) * exact(p) * h * h;
            }
        err = std::max(err, std::abs(s[k] - ref));
    }
    return err;
}
}  // namespace

TEST(Delta, KernelShape) {
    const RegularizedDelta d{0.5};
    EXPECT_NEAR(delta_eval(d, 0.0), 1.0 / 0.5, 1e-15);
    EXPECT_EQ(delta_eval(d, 0.5), 0.0);
    EXPECT_EQ(delta_eval(d, -0.7), 0.0);
    EXPECT_NEAR(delta_eval(d, 0.2), delta_eval(d, -0.2), 1e-15);
    // Continuous integral is one (midpoint rule).
    double s = 0.0;
    const int m = 100000;
    for (int k = 0; k < m; ++k) s += delta_eval(d, -0.5 + (k + 0.5) / m) / m;
    EXPECT_NEAR(s, 1.0, 1e-9);
}

TEST(Delta, DiscretePartitionOfUnity) {
    const CartesianGrid g{128, 128, kPi};
    const auto d = delta_for_grid(g);
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> ux(0.0, 2 * kPi), uy(-kPi, kPi);
    double worst = 0.0;
    for (int k = 0; k < 100; ++k) worst = std::max(worst, std::abs(discrete_kernel_mass(g, d, {ux(rng), uy(rng)}) - 1.0));
    EXPECT_LE(worst, 1e-12);
}

TEST(Delta, PartitionOfUnityAcrossWidths) {
    const CartesianGrid g{64, 64, kPi};
    for (double cells : {2.0, 3.0, 4.0}) {
        const auto d = delta_for_grid(g, cells);
        EXPECT_NEAR(discrete_kernel_mass(g, d, {1.2345, -0.678}), 1.0, 1e-12);
    }
}

TEST(Ibm, SamplesConstantsExactly) {
    const CartesianGrid g{64, 64, kPi};
    const auto f = make_field(g, [](Vec2) { return 3.0; });
    const auto iface = circle_interface({kPi, 0.0}, 1.0, 40);
    for (double v : interface_sample(f, iface, delta_for_grid(g))) EXPECT_NEAR(v, 3.0, 1e-12);
}

TEST(Ibm, SpreadIsAdjointOfSample) {
    const CartesianGrid g{64, 64, kPi};
    const auto d = delta_for_grid(g);
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const auto f = make_field(g, [&](Vec2) { return u(rng); });
    const auto iface = circle_interface({3.0, -0.4}, 1.3, 50);
    std::vector<double> v(iface.size());
    for (double& x : v) x = u(rng);
    const auto s = interface_sample(f, iface, d);
    const auto F = spread(v, iface, d, g);
    double lhs = 0.0, rhs = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k) lhs += s[k] * v[k] * iface.weights[k];
    for (std::size_t n = 0; n < g.size(); ++n) rhs += F.values[n] * f.values[n];
    rhs *= g.dx() * g.dy();
    EXPECT_NEAR(lhs, rhs, 1e-12 * std::max(1.0, std::abs(lhs)));
}

TEST(Ibm, SpreadConservesTotal) {
    const CartesianGrid g{64, 64, kPi};
    const auto iface = circle_interface({3.0, 0.0}, 1.0, 32);
    const std::vector<double> ones(iface.size(), 1.0);
    const auto F = spread(ones, iface, delta_for_grid(g), g);
    double total = 0.0;
    for (double x : F.values) total += x;
    EXPECT_NEAR(total * g.dx() * g.dy(), iface.measure(), 1e-12);
    EXPECT_NEAR(iface.measure(), 2 * kPi, 1e-12);
}

TEST(Ibm, PeriodicWrapMatchesShiftedGeometry) {
    const CartesianGrid g{64, 64, kPi};
    const auto d = delta_for_grid(g);
    const auto f = make_field(g, [](Vec2 p) { return std::cos(p.x) + std::sin(p.y); });
    Interface near_seam{{{0.01, 0.0}}, {1.0}};
    const auto s = interface_sample(f, near_seam, d, true);
    EXPECT_NEAR(s[0], std::cos(0.01) * 1.0, 0.01);
}

TEST(Ibm, GeometryErrors) {
    const CartesianGrid g{64, 64, kPi};
    const auto f = make_field(g, [](Vec2) { return 1.0; });
    Interface near_seam{{{0.01, 0.0}}, {1.0}};
    EXPECT_THROW(interface_sample(f, near_seam, delta_for_grid(g), false), GeometryError);
    EXPECT_THROW(interface_sample(f, near_seam, RegularizedDelta{g.dx()}, true), GeometryError);
    const std::vector<double> two(2, 1.0);
    EXPECT_THROW(spread(two, near_seam, delta_for_grid(g), g), GeometryError);
}

TEST(Ibm, FixedEpsilonConvergesWithRefinement) {
    const double eps = 0.3;
    const double e1 = sample_error(64, eps);
    const double e2 = sample_error(128, eps);
    EXPECT_LT(e2, e1);
    EXPECT_GT(std::log2(e1 / e2), 1.8);
}
