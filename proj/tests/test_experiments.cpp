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

#include "enhdiff/experiments.hpp"

using namespace enhdiff;

namespace {
constexpr double kPi = std::numbers::pi;

ExperimentSpec synthetic_spec(double slope, std::optional<double> log_q = std::nullopt) {
    ExperimentSpec s;
    s.flow = flow::PowerShear{1};
    s.initial = InitialKind::TentShear;
    s.kappas = log_spaced_kappas(1e-2, 1e-5, 6);
    s.synthetic = SyntheticLaw{slope, log_q};
    return s;
}
}  // namespace

TEST(InitialData, BetaPerFamily) {
    EXPECT_NEAR(family_beta(flow::PowerShear{2}), 0.25, 1e-15);
    EXPECT_NEAR(family_beta(flow::ConstantShear{3.0}), 1.0 / 3.0, 1e-15);
    EXPECT_NEAR(family_beta(flow::HolderShear{0.5, 1.0}), 0.4, 1e-15);
    EXPECT_NEAR(family_beta(flow::Circular{1.0}), 1.0 / 3.0, 1e-15);
    EXPECT_THROW(family_beta(flow::Zero{}), ConfigError);
}

TEST(InitialData, TentNormMatchesQuadrature) {
    const auto d = build_initial_data(InitialKind::TentShear, flow::PowerShear{1}, 1e-3);
    EXPECT_NEAR(d.scale, 0.1, 1e-12);
    EXPECT_EQ(d.support_lo, -d.scale);
    const CartesianGrid g{64, 1024, 1.0};
    const auto f = make_field(g, d);
    EXPECT_NEAR(l2_norm_sq(f) / d.exact_norm_sq(), 1.0, 1e-3);
    EXPECT_EQ(d({1.0, 0.2}), 0.0);
    EXPECT_NEAR(d({kPi / 2, 0.0}), 0.1, 1e-15);
}

TEST(InitialData, AnnulusNormMatchesQuadrature) {
    const auto d = build_initial_data(InitialKind::AnnulusCircular, flow::Circular{2.0}, 1e-2);
    EXPECT_NEAR(d.scale, std::pow(1e-2, 0.25), 1e-14);
    const PolarGrid g{512, 64, d.scale / 4, 8 * d.scale};
    const auto f = make_polar_field(g, [&](double r, double th) { return d.polar(r, th); });
    EXPECT_NEAR(l2_norm_sq(f) / d.exact_norm_sq(), 1.0, 1e-3);
    EXPECT_EQ(d.polar(d.scale, 1.0), 0.0);
    // Cartesian and polar evaluation agree.
    const double r = 3.1 * d.scale, th = 0.7;
    EXPECT_NEAR(d({r * std::cos(th), r * std::sin(th)}), d.polar(r, th), 1e-14);
}

TEST(InitialData, SineNormAndPairingErrors) {
    const auto d = build_initial_data(InitialKind::SineX, flow::Zero{}, 0.1);
    EXPECT_NEAR(d.exact_norm_sq(), 2 * kPi * kPi, 1e-12);
    EXPECT_THROW(build_initial_data(InitialKind::SineX, flow::Circular{1.0}, 0.1), ConfigError);
    EXPECT_THROW(build_initial_data(InitialKind::TentShear, flow::Circular{1.0}, 0.1), ConfigError);
    EXPECT_THROW(build_initial_data(InitialKind::AnnulusCircular, flow::PowerShear{1}, 0.1), ConfigError);
    EXPECT_THROW(build_initial_data(InitialKind::TentShear, flow::PowerShear{1}, 1.5), ConfigError);
    EXPECT_THROW(build_initial_data(InitialKind::TentShear, flow::Zero{}, 0.1), ConfigError);
    EXPECT_NO_THROW(build_initial_data(InitialKind::TentShear, flow::Zero{}, 0.1, 0.5));
}

TEST(Rates, PredictedExponents) {
    EXPECT_NEAR(predicted_exponent(Family::CriticalShear, {.n = 1}), 1.0 / 3.0, 1e-15);
    EXPECT_NEAR(predicted_exponent(Family::CriticalShear, {.n = 2}), 0.5, 1e-15);
    EXPECT_NEAR(predicted_exponent(Family::Holder, {.alpha = 0.5}), 0.2, 1e-15);
    EXPECT_NEAR(predicted_exponent(Family::Circular, {.q = 2}), 0.5, 1e-15);
    EXPECT_NEAR(predicted_exponent(Family::AnisotropicCircular, {.q = 1, .gamma = 1}), 2.0 / 3.0, 1e-15);
}

TEST(Rates, BalanceRegimes) {
    EXPECT_EQ(balance_regime_classifier(1.0, 0.0), BalanceRegime::RadialDominant);
    EXPECT_EQ(balance_regime_classifier(1.0, 1.0), BalanceRegime::Balanced);
    EXPECT_EQ(balance_regime_classifier(0.5, 1.0), BalanceRegime::AngularDominant);
    EXPECT_NEAR(regime_slope(1.0, 0.0), -1.0 / 3.0, 1e-15);
    EXPECT_NEAR(regime_slope(1.0, 1.0), -2.0 / 3.0, 1e-15);
    EXPECT_NEAR(regime_slope(2.0, 1.0), -0.5, 1e-15);
    EXPECT_NEAR(regime_slope(0.5, 1.0), -1.4, 1e-15);
    EXPECT_EQ(regime_name(BalanceRegime::Balanced), "balanced");
}

TEST(Spec, PredictedSlopeFollowsFamily) {
    ExperimentSpec s;
    s.flow = flow::PowerShear{2};
    EXPECT_NEAR(predicted_slope(s), -0.5, 1e-15);
    s.flow = flow::Circular{2.0};
    s.anisotropic = true;
    s.gamma = 1.0;
    EXPECT_NEAR(predicted_slope(s), -0.5, 1e-15);
    EXPECT_TRUE(log_correction_enabled(s));
    s.log_correction = LogCorrection::Off;
    EXPECT_FALSE(log_correction_enabled(s));
}

TEST(Spec, Validation) {
    ExperimentSpec s;
    s.flow = flow::PowerShear{1};
    s.kappas = {1e-2, 1e-3, 1e-4, 1e-5};
    EXPECT_THROW(validate(s, true), ConfigError);
    EXPECT_NO_THROW(validate(s, false));
    s.kappas = {1e-2, 1e-3, 1e-3, 1e-4, 1e-5};
    EXPECT_THROW(validate(s, true), ConfigError);
    s.kappas = {1e-1, 1e-2, 1e-3, 1e-4, 1e-5};
    EXPECT_NO_THROW(validate(s, true));
    s.anisotropic = true;
    EXPECT_THROW(validate(s, true), ConfigError);
    s.anisotropic = false;
    s.threshold = 1.0;
    EXPECT_THROW(validate(s, true), ConfigError);
}

TEST(Spec, LogSpacedKappas) {
    const auto k = log_spaced_kappas(1e-1, 1e-3, 5);
    ASSERT_EQ(k.size(), 5u);
    EXPECT_NEAR(k[0], 1e-1, 1e-15);
    EXPECT_NEAR(k[2], 1e-2, 1e-15);
    EXPECT_NEAR(k[4], 1e-3, 1e-16);
    EXPECT_THROW(log_spaced_kappas(1e-3, 1e-1, 5), ConfigError);
}

TEST(Fit, SyntheticPowerLawIsRecovered) {
    const auto r = sweep_and_fit(synthetic_spec(-0.4));
    ASSERT_TRUE(r.fit);
    EXPECT_NEAR(r.fit->slope, -0.4, 1e-10);
    EXPECT_NEAR(r.fit->fitted_c, 1.0, 1e-9);
    EXPECT_LT(r.fit->residual_rms, 1e-12);
    EXPECT_FALSE(r.fit->log_correction_applied);
}

TEST(Fit, SyntheticLogCorrectedLawIsRecovered) {
    const auto r = sweep_and_fit(synthetic_spec(-0.5, 2.0));
    ASSERT_TRUE(r.fit);
    EXPECT_TRUE(r.fit->log_correction_applied);
    EXPECT_NEAR(r.fit->slope, -0.5, 1e-10);
}

TEST(Fit, CensoredRowsRaiseFitError) {
    std::vector<MixingTime> rows;
    for (int i = 0; i < 6; ++i) rows.push_back({std::pow(10.0, -1 - i), 1.0 + i, i >= 3, 0.1, {}});
    try {
        fit_mixing_times(rows, false, 1.0, -1.0 / 3.0);
        FAIL() << "expected FitError";
    } catch (const FitError& e) {
        EXPECT_EQ(e.censored_kappas().size(), 3u);
        EXPECT_NE(std::string(e.what()).find("censored"), std::string::npos);
    }
    rows[3].censored = false;
    EXPECT_NO_THROW(fit_mixing_times(rows, false, 1.0, -1.0 / 3.0));
}

TEST(MixingTime, PureDiffusionOfSineMode) {
    // ||rho|| = e^{-kappa t} ||rho0||, so T = 1/kappa at the 1/e threshold.
    ExperimentSpec s;
    s.flow = flow::Zero{};
    s.initial = InitialKind::SineX;
    s.res.nx = s.res.ny = 16;
    s.extra_thresholds = {0.5};
    const double kappa = 0.1;
    const auto m = measure_mixing_time(s, kappa);
    EXPECT_FALSE(m.censored);
    EXPECT_NEAR(m.T, 10.0, m.dt + 1e-9);
    ASSERT_EQ(m.sensitivity.size(), 1u);
    EXPECT_NEAR(m.sensitivity[0].time, std::log(2.0) / kappa, m.dt + 1e-9);
}

TEST(MixingTime, ShortHorizonIsCensored) {
    ExperimentSpec s;
    s.flow = flow::Zero{};
    s.initial = InitialKind::SineX;
    s.res.nx = s.res.ny = 16;
    s.res.horizon = 2.0;
    const auto m = measure_mixing_time(s, 0.1);
    EXPECT_TRUE(m.censored);
    EXPECT_NEAR(m.T, 2.0, 1e-12);
}

TEST(MixingTime, MonteCarloAgreesWithGridForHeat) {
    ExperimentSpec s;
    s.flow = flow::Zero{};
    s.initial = InitialKind::SineX;
    s.backend = Backend::MonteCarlo;
    s.res.mc_samples = 2000;
    s.res.mc_nx = 8;
    s.res.mc_ny = 4;
    s.res.steps_per_timescale = 50;
    s.res.mc_ladder_stride = 1;
    s.seed = 3;
    const auto m = measure_mixing_time(s, 0.1);
    EXPECT_FALSE(m.censored);
    EXPECT_NEAR(m.T, 10.0, 1.0);
}

TEST(GridSimulation, ChoosesGeometry) {
    ExperimentSpec s;
    s.flow = flow::Circular{1.0};
    s.initial = InitialKind::AnnulusCircular;
    s.res.nr = 32;
    s.res.ntheta = 32;
    GridSimulation sim(s, 1e-3);
    EXPECT_TRUE(sim.is_polar());
    EXPECT_NEAR(sim.polar_field().grid.r_min, 0.1 / 4, 1e-12);
    EXPECT_NEAR(sim.polar_field().grid.r_max, 0.8, 1e-12);
    EXPECT_THROW(sim.restart_from(CartesianField{}), ConfigError);

    ExperimentSpec c;
    c.flow = flow::PowerShear{1};
    c.initial = InitialKind::TentShear;
    c.res.nx = c.res.ny = 32;
    GridSimulation cs(c, 1e-3);
    EXPECT_FALSE(cs.is_polar());
    EXPECT_NEAR(cs.cartesian_field().grid.ly, 1.0, 1e-12);
    const double n0 = cs.norm_sq();
    cs.step();
    EXPECT_LE(cs.norm_sq(), n0);
    EXPECT_NEAR(cs.time(), cs.dt(), 1e-15);
}

TEST(VarianceBound, ReportShapeAndBracket) {
    EXPECT_NEAR(variance_bracket(1e-3, 1.0, 2.0), 2e-3 + 0.2 * 0.2 + std::pow(0.2, 3), 1e-15);
    ExperimentSpec s;
    s.flow = flow::PowerShear{1};
    s.res.mc_samples = 200;
    s.res.mc_nx = 8;
    s.res.mc_ny = 8;
    s.res.dt = 0.5;
    s.seed = 9;
    const auto rep = variance_bound_report(s, 1e-3, {1.0, 2.0, 4.0});
    ASSERT_EQ(rep.rows.size(), 3u);
    EXPECT_GT(rep.fitted_c, 0.0);
    for (const auto& r : rep.rows) {
        EXPECT_GE(r.measured, 0.0);
        EXPECT_LE(r.measured, r.bound * (1 + 1e-12));
    }
    s.flow = flow::Circular{1.0};
    EXPECT_THROW(variance_bound_report(s, 1e-3, {1.0}), UnsupportedVariant);
}

TEST(HolderScaling, ConstantIsSharedAcrossKappa) {
    const auto rep = holder_functional_scaling(flow::HolderShear{0.5, 1.0}, {1e-2, 1e-3}, 0.0, 100, 4000, 5);
    ASSERT_EQ(rep.rows.size(), 2u);
    EXPECT_GT(rep.fitted_c, 0.0);
    EXPECT_LT(rep.max_deviation, 2.0);
    EXPECT_THROW(holder_functional_scaling(flow::PowerShear{1}, {1e-2}, 0.0, 10, 10, 1), UnsupportedVariant);
}
