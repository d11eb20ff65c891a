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

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace enhdiff {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
///
/// Stateless: the output block is a pure function of (counter, key). Every
/// random draw in the library is addressed by a counter built from
/// (step, stream) under a per-sample key, so any sample can be regenerated
/// without replaying the others.
struct Philox4x32 {
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static constexpr std::uint32_t kMul0 = 0xD2511F53u;
    static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
    static constexpr int kRounds = 10;

    static constexpr Counter generate(Counter ctr, Key key) noexcept {
        for (int r = 0; r < kRounds; ++r) {
            const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
            const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
            const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
            const auto lo0 = static_cast<std::uint32_t>(p0);
            const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
            const auto lo1 = static_cast<std::uint32_t>(p1);
            ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
            key[0] += kWeyl0;
            key[1] += kWeyl1;
        }
        return ctr;
    }
};

/// SplitMix64 finalizer; used to derive per-sample keys.
constexpr std::uint64_t splitmix64(std::uint64_t z) noexcept {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

/// Seed of sample `index` in an ensemble rooted at `base_seed`.
constexpr std::uint64_t mix_seed(std::uint64_t base_seed, std::uint64_t index) noexcept {
    return splitmix64(base_seed ^ splitmix64(index + 0x632BE59BD9B4E019ull));
}

/// Uniform double in (0, 1) from the top 52 bits of a 64-bit word; the
/// half-cell offset keeps both endpoints unreachable after rounding.
constexpr double to_open_unit(std::uint64_t bits) noexcept {
    return (static_cast<double>(bits >> 12) + 0.5) * 0x1.0p-52;
}

/// Keyed stream of standard normals. `draw(step, stream)` returns two
/// independent N(0,1) variates (Box-Muller on one Philox block).
class NormalStream {
public:
    constexpr explicit NormalStream(std::uint64_t seed) noexcept
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}

    std::array<double, 2> draw(std::uint64_t step, std::uint32_t stream = 0) const noexcept {
        const auto out = Philox4x32::generate(
            {static_cast<std::uint32_t>(step), static_cast<std::uint32_t>(step >> 32), stream, 0u},
            key_);
        const double u1 = to_open_unit((std::uint64_t{out[0]} << 32) | out[1]);
        const double u2 = to_open_unit((std::uint64_t{out[2]} << 32) | out[3]);
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        return {radius * std::cos(angle), radius * std::sin(angle)};
    }

    /// Two uniforms in (0,1) at the given counter position.
    std::array<double, 2> uniform(std::uint64_t step, std::uint32_t stream = 0) const noexcept {
        const auto out = Philox4x32::generate(
            {static_cast<std::uint32_t>(step), static_cast<std::uint32_t>(step >> 32), stream, 1u},
            key_);
        return {to_open_unit((std::uint64_t{out[0]} << 32) | out[1]),
                to_open_unit((std::uint64_t{out[2]} << 32) | out[3])};
    }

private:
    Philox4x32::Key key_;
};

}  // namespace enhdiff
