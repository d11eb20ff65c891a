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
#include <vector>

#include "enhdiff/error.hpp"
#include "enhdiff/stats.hpp"

using namespace enhdiff;

TEST(SampleStats, SmallSampleByHand) {
    const std::vector<double> xs{1.0, 2.0, 3.0, 4.0};
    const auto s = sample_stats(xs);
    EXPECT_EQ(s.n, 4u);
    EXPECT_DOUBLE_EQ(s.mean, 2.5);
    EXPECT_DOUBLE_EQ(s.variance, 5.0 / 3.0);
    EXPECT_DOUBLE_EQ(s.standard_error, std::sqrt(5.0 / 12.0));
}

TEST(SampleStats, DegenerateInputs) {
    EXPECT_EQ(sample_stats(std::vector<double>{}).n, 0u);
    const auto one = sample_stats(std::vector<double>{7.0});
    EXPECT_DOUBLE_EQ(one.mean, 7.0);
    EXPECT_EQ(one.variance, 0.0);
    const auto flat = sample_stats(std::vector<double>(10, 3.25));
    EXPECT_EQ(flat.variance, 0.0);
    EXPECT_EQ(flat.variance_se, 0.0);
}

TEST(OlsFit, ExactLineIsRecovered) {
    std::vector<double> xs, ys;
    for (int i = 0; i < 6; ++i) {
        xs.push_back(std::log(std::pow(10.0, -2.5 - 0.5 * i)));
        ys.push_back(1.25 - 0.5 * xs.back());
    }
    const auto f = ols_fit(xs, ys);
    EXPECT_NEAR(f.slope, -0.5, 1e-12);
    EXPECT_NEAR(f.intercept, 1.25, 1e-12);
    EXPECT_LT(f.residual_rms, 1e-12);
    EXPECT_LT(f.slope_ci_halfwidth, 1e-10);
}

TEST(OlsFit, ConfidenceIntervalUsesStudentT) {
    const std::vector<double> xs{0, 1, 2, 3, 4};
    const std::vector<double> ys{0.1, 0.9, 2.2, 2.8, 4.1};
    const auto f = ols_fit(xs, ys);
    EXPECT_NEAR(f.slope, 0.99, 1e-12);
    EXPECT_NEAR(f.slope_ci_halfwidth, student_t975(3) * f.slope_stderr, 1e-14);
    EXPECT_NEAR(student_t975(3), 3.182, 1e-3);
}

TEST(OlsFit, RejectsTooFewOrDegeneratePoints) {
    EXPECT_THROW(ols_fit(std::vector<double>{1.0}, std::vector<double>{1.0}), Error);
    EXPECT_TRUE(std::isinf(ols_fit(std::vector<double>{1.0, 2.0}, std::vector<double>{1.0, 2.0}).slope_ci_halfwidth));
    EXPECT_THROW(ols_fit(std::vector<double>{1.0, 1.0, 1.0}, std::vector<double>{1.0, 2.0, 3.0}), Error);
    EXPECT_THROW(ols_fit(std::vector<double>{1.0, 2.0, 3.0}, std::vector<double>{1.0, 2.0}), Error);
}
