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
#include <set>
#include <vector>

#include "enhdiff/parallel.hpp"
#include "enhdiff/rng.hpp"
#include "enhdiff/stats.hpp"

using namespace enhdiff;

TEST(Philox, KnownAnswerZero) {
    const auto out = Philox4x32::generate({0, 0, 0, 0}, {0, 0});
    EXPECT_EQ(out[0], 0x6627e8d5u);
    EXPECT_EQ(out[1], 0xe169c58du);
    EXPECT_EQ(out[2], 0xbc57ac4cu);
    EXPECT_EQ(out[3], 0x9b00dbd8u);
}

TEST(Philox, KnownAnswerAllOnes) {
    const auto out = Philox4x32::generate({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                                          {0xffffffffu, 0xffffffffu});
    EXPECT_EQ(out[0], 0x408f276du);
    EXPECT_EQ(out[1], 0x41c83b0eu);
    EXPECT_EQ(out[2], 0xa20bc7c6u);
    EXPECT_EQ(out[3], 0x6d5451fdu);
}

TEST(Philox, KnownAnswerPi) {
    const auto out = Philox4x32::generate({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                                          {0xa4093822u, 0x299f31d0u});
    EXPECT_EQ(out[0], 0xd16cfe09u);
    EXPECT_EQ(out[1], 0x94fdccebu);
    EXPECT_EQ(out[2], 0x5001e420u);
    EXPECT_EQ(out[3], 0x24126ea1u);
}

TEST(Philox, ConstexprEvaluable) {
    constexpr auto out = Philox4x32::generate({0, 0, 0, 0}, {0, 0});
    static_assert(out[0] == 0x6627e8d5u);
    SUCCEED();
}

TEST(Seeds, MixSeedSpreadsIndices) {
    std::set<std::uint64_t> seen;
    for (std::uint64_t i = 0; i < 10000; ++i) seen.insert(mix_seed(42, i));
    EXPECT_EQ(seen.size(), 10000u);
    EXPECT_NE(mix_seed(1, 0), mix_seed(2, 0));
}

TEST(Seeds, OpenUnitNeverHitsEndpoints) {
    EXPECT_GT(to_open_unit(0), 0.0);
    EXPECT_LT(to_open_unit(~std::uint64_t{0}), 1.0);
}

TEST(NormalStream, DrawIsAPureFunctionOfCounter) {
    const NormalStream a(123), b(123);
    for (std::uint64_t k = 0; k < 50; ++k) {
        EXPECT_EQ(a.draw(k, 3), b.draw(k, 3));
    }
    EXPECT_NE(a.draw(5, 0), a.draw(5, 1));
    EXPECT_NE(a.draw(5, 0), NormalStream(124).draw(5, 0));
}

TEST(NormalStream, MomentsOfStandardNormal) {
    const NormalStream s(2024);
    std::vector<double> xs;
    for (std::uint64_t k = 0; k < 200000; ++k) {
        const auto d = s.draw(k);
        xs.push_back(d[0]);
        xs.push_back(d[1]);
    }
    const auto st = sample_stats(xs);
    EXPECT_NEAR(st.mean, 0.0, 4.0 * st.standard_error);
    EXPECT_NEAR(st.variance, 1.0, 4.0 * st.variance_se);
    double m4 = 0.0;
    for (double x : xs) m4 += x * x * x * x;
    EXPECT_NEAR(m4 / static_cast<double>(xs.size()), 3.0, 0.05);
}

TEST(NormalStream, UniformsAreUniform) {
    const NormalStream s(9);
    std::vector<int> bins(10, 0);
    const int n = 100000;
    for (int k = 0; k < n; ++k) {
        const auto u = s.uniform(static_cast<std::uint64_t>(k));
        ++bins[static_cast<std::size_t>(u[0] * 10.0)];
    }
    double chi2 = 0.0;
    for (int b : bins) chi2 += std::pow(b - n / 10.0, 2) / (n / 10.0);
    EXPECT_LT(chi2, 27.88);  // 99.9% quantile with 9 dof
}

TEST(Parallel, ResolveThreadsHonoursRequestAndEnvironment) {
    EXPECT_EQ(resolve_threads(3), 3u);
    setenv("ENHDIFF_THREADS", "5", 1);
    EXPECT_EQ(resolve_threads(0), 5u);
    unsetenv("ENHDIFF_THREADS");
    EXPECT_GE(resolve_threads(0), 1u);
}

TEST(Parallel, CoversEveryIndexOnceForAnyThreadCount) {
    for (unsigned threads : {1u, 2u, 3u, 8u}) {
        std::vector<int> hits(1001, 0);
        parallel_for(hits.size(), threads, [&](std::size_t i) { ++hits[i]; });
        for (int h : hits) ASSERT_EQ(h, 1);
    }
}

TEST(Parallel, PropagatesExceptions) {
    EXPECT_THROW(parallel_for(100, 4,
                              [](std::size_t i) {
                                  if (i == 57) throw std::runtime_error("boom");
                              }),
                 std::runtime_error);
}
