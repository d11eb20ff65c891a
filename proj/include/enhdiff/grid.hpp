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
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <optional>
#include <vector>

#include "error.hpp"
#include "fft.hpp"
#include "flows.hpp"
#include "parallel.hpp"

namespace enhdiff {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

inline constexpr bool is_power_of_two(std::size_t n) noexcept { return n >= 2 && (n & (n - 1)) == 0; }

/// Periodic box [0, 2 pi) x [-ly, ly); nodes at x_i = i dx, y_j = -ly + j dy.
struct CartesianGrid {
    std::size_t nx = 256;
    std::size_t ny = 256;
    double ly = std::numbers::pi;

    double dx() const noexcept { return kTwoPi / static_cast<double>(nx); }
    double dy() const noexcept { return 2.0 * ly / static_cast<double>(ny); }
    double x(std::size_t i) const noexcept { return static_cast<double>(i) * dx(); }
    double y(std::size_t j) const noexcept { return -ly + static_cast<double>(j) * dy(); }
    std::size_t size() const noexcept { return nx * ny; }
    std::size_t index(std::size_t i, std::size_t j) const noexcept { return j * nx + i; }
    friend bool operator==(const CartesianGrid&, const CartesianGrid&) = default;
};

inline void validate(const CartesianGrid& g) {
    if (!is_power_of_two(g.nx) || !is_power_of_two(g.ny))
        throw ConfigError("cartesian grid: nx and ny must be powers of two");
    if (!(g.ly > 0.0)) throw ConfigError("cartesian grid: ly must be > 0");
}

/// Annulus [r_min, r_max] x [0, 2 pi) with cell-centred radii
/// r_i = r_min + (i + 1/2) dr and angles theta_j = j dtheta.
struct PolarGrid {
    std::size_t nr = 256;
    std::size_t ntheta = 256;
    double r_min = 0.1;
    double r_max = 1.0;

    double dr() const noexcept { return (r_max - r_min) / static_cast<double>(nr); }
    double dtheta() const noexcept { return kTwoPi / static_cast<double>(ntheta); }
    double r(std::size_t i) const noexcept { return r_min + (static_cast<double>(i) + 0.5) * dr(); }
    double theta(std::size_t j) const noexcept { return static_cast<double>(j) * dtheta(); }
    std::size_t size() const noexcept { return nr * ntheta; }
    std::size_t index(std::size_t i, std::size_t j) const noexcept { return i * ntheta + j; }
    friend bool operator==(const PolarGrid&, const PolarGrid&) = default;
};

inline void validate(const PolarGrid& g) {
    if (g.nr < 3) throw ConfigError("polar grid: nr must be >= 3");
    if (!is_power_of_two(g.ntheta) || g.ntheta < 4) throw ConfigError("polar grid: ntheta must be a power of two >= 4");
    if (!(g.r_min > 0.0) || !(g.r_max > g.r_min)) throw ConfigError("polar grid: need 0 < r_min < r_max");
}

template <class Grid>
struct ScalarField {
    Grid grid;
    std::vector<double> values;
    double time = 0.0;

    double operator()(std::size_t a, std::size_t b) const { return values[grid.index(a, b)]; }
};

using CartesianField = ScalarField<CartesianGrid>;
using PolarField = ScalarField<PolarGrid>;

/// Sample f(Vec2{x, y}) at every node.
template <class F>
CartesianField make_field(const CartesianGrid& grid, F&& f) {
    validate(grid);
    CartesianField field{grid, std::vector<double>(grid.size()), 0.0};
    for (std::size_t j = 0; j < grid.ny; ++j)
        for (std::size_t i = 0; i < grid.nx; ++i) field.values[grid.index(i, j)] = f(Vec2{grid.x(i), grid.y(j)});
    return field;
}

/// Sample f(r, theta) at every node.
template <class F>
PolarField make_polar_field(const PolarGrid& grid, F&& f) {
    validate(grid);
    PolarField field{grid, std::vector<double>(grid.size()), 0.0};
    for (std::size_t i = 0; i < grid.nr; ++i)
        for (std::size_t j = 0; j < grid.ntheta; ++j) field.values[grid.index(i, j)] = f(grid.r(i), grid.theta(j));
    return field;
}

inline void require_step(double dt) {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("time step must be finite and > 0");
}

/// How semi-Lagrangian departure values are reconstructed.
///  - CubicLagrange: 4-point Lagrange per direction (any field).
///  - SpectralShift: exact Fourier shift along periodic x (shear fields only).
///  - Auto: SpectralShift for shear fields, CubicLagrange otherwise.
enum class Interpolation { CubicLagrange, SpectralShift, Auto };

inline Interpolation resolve(Interpolation interp, const VelocityField& vel) {
    if (interp == Interpolation::Auto) return is_shear(vel) ? Interpolation::SpectralShift : Interpolation::CubicLagrange;
    if (interp == Interpolation::SpectralShift && !is_shear(vel))
        throw UnsupportedVariant("spectral shift advection requires a shear field, got " + flow_name(vel));
    return interp;
}

/// Cubic Lagrange weights for nodes {-1, 0, 1, 2} at fractional offset s in [0, 1).
inline std::array<double, 4> cubic_weights(double s) noexcept {
    return {-s * (s - 1.0) * (s - 2.0) / 6.0, (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0,
            -(s + 1.0) * s * (s - 2.0) / 2.0, (s + 1.0) * s * (s - 1.0) / 6.0};
}

struct EnergySample {
    double norm_sq = 0.0;  ///< ||rho||^2
    double grad_sq = 0.0;  ///< ||grad rho||^2
};

/// Cached transforms for one Cartesian grid. Not thread-safe; use one per
/// stepping context.
class CartesianSpectral {
public:
    using Complex = fft::Complex;

    explicit CartesianSpectral(const CartesianGrid& grid)
        : grid_((validate(grid), grid)),
          nxh_(grid.nx / 2 + 1),
          rows_(grid.ny, grid.nx),
          cols_(grid.ny, nxh_),
          real_(fft::allocate<double>(grid.size())),
          spec_(fft::allocate<Complex>(grid.ny * nxh_)),
          work_(fft::allocate<Complex>(grid.ny * nxh_)),
          kx_(nxh_),
          ky_(grid.ny) {
        for (std::size_t i = 0; i < nxh_; ++i) kx_[i] = static_cast<double>(i);
        const double scale = std::numbers::pi / grid.ly;
        for (std::size_t m = 0; m < grid.ny; ++m) {
            const auto signed_m = m <= grid.ny / 2 ? static_cast<double>(m) : static_cast<double>(m) - static_cast<double>(grid.ny);
            ky_[m] = scale * signed_m;
        }
    }

    const CartesianGrid& grid() const noexcept { return grid_; }

    void diffuse(CartesianField& f, double kappa, double dt) {
        check(f);
        require_step(dt);
        if (kappa == 0.0) {
            f.time += dt;
            return;
        }
        load(f);
        rows_.forward(real_.get(), spec_.get());
        cols_.forward(spec_.get());
        apply_heat(kappa, dt, 1.0 / static_cast<double>(grid_.size()));
        cols_.backward(spec_.get());
        rows_.backward(spec_.get(), real_.get());
        store(f);
        f.time += dt;
    }

    /// Exact per-row Fourier shift by the shear displacement u(y_j) dt.
    void advect_shift(CartesianField& f, const VelocityField& vel, double dt) {
        check(f);
        require_step(dt);
        if (!is_shear(vel)) throw UnsupportedVariant("spectral shift requires a shear field");
        load(f);
        rows_.forward(real_.get(), spec_.get());
        shift_rows(vel, dt, 1.0 / static_cast<double>(grid_.nx));
        rows_.backward(spec_.get(), real_.get());
        store(f);
        f.time += dt;
    }

    /// Half diffusion, shear shift, half diffusion without leaving spectral space in x.
    void strang_shear(CartesianField& f, const VelocityField& vel, double kappa, double dt) {
        check(f);
        require_step(dt);
        load(f);
        rows_.forward(real_.get(), spec_.get());
        if (kappa != 0.0) {
            cols_.forward(spec_.get());
            apply_heat(kappa, 0.5 * dt, 1.0 / static_cast<double>(grid_.ny));
            cols_.backward(spec_.get());
        }
        shift_rows(vel, dt, 1.0);
        if (kappa != 0.0) {
            cols_.forward(spec_.get());
            apply_heat(kappa, 0.5 * dt, 1.0 / static_cast<double>(grid_.ny));
            cols_.backward(spec_.get());
        }
        scale_spec(1.0 / static_cast<double>(grid_.nx));
        rows_.backward(spec_.get(), real_.get());
        store(f);
        f.time += dt;
    }

    /// ||rho||^2 and ||grad rho||^2 by Parseval; the Nyquist wavenumbers use |k|
    /// so the identity with the heat multiplier is exact.
    EnergySample energy(const CartesianField& f) {
        check(f);
        load(f);
        rows_.forward(real_.get(), spec_.get());
        cols_.forward(spec_.get());
        double s0 = 0.0, s1 = 0.0;
        for (std::size_t m = 0; m < grid_.ny; ++m) {
            for (std::size_t i = 0; i < nxh_; ++i) {
                const double weight = (i == 0 || 2 * i == grid_.nx) ? 1.0 : 2.0;
                const double a = std::norm(spec_[m * nxh_ + i]) * weight;
                s0 += a;
                s1 += a * (kx_[i] * kx_[i] + ky_[m] * ky_[m]);
            }
        }
        const double scale = grid_.dx() * grid_.dy() / static_cast<double>(grid_.size());
        return {s0 * scale, s1 * scale};
    }

    /// int |grad rho|^2 over rows with y_lo <= y_j < y_hi, from spectral derivatives.
    double windowed_grad_sq(const CartesianField& f, double y_lo, double y_hi) {
        check(f);
        load(f);
        rows_.forward(real_.get(), spec_.get());
        cols_.forward(spec_.get());
        const double norm = 1.0 / static_cast<double>(grid_.size());
        double total = 0.0;
        for (int comp = 0; comp < 2; ++comp) {
            for (std::size_t m = 0; m < grid_.ny; ++m) {
                for (std::size_t i = 0; i < nxh_; ++i) {
                    double k = comp == 0 ? kx_[i] : ky_[m];
                    if ((comp == 0 && 2 * i == grid_.nx) || (comp == 1 && 2 * m == grid_.ny)) k = 0.0;
                    work_[m * nxh_ + i] = spec_[m * nxh_ + i] * Complex(0.0, k * norm);
                }
            }
            cols_.backward(work_.get());
            rows_.backward(work_.get(), real_.get());
            for (std::size_t j = 0; j < grid_.ny; ++j) {
                const double y = grid_.y(j);
                if (y < y_lo || y >= y_hi) continue;
                for (std::size_t i = 0; i < grid_.nx; ++i) {
                    const double g = real_[grid_.index(i, j)];
                    total += g * g;
                }
            }
        }
        return total * grid_.dx() * grid_.dy();
    }

private:
    void check(const CartesianField& f) const {
        if (!(f.grid == grid_) || f.values.size() != grid_.size())
            throw ConfigError("field does not match the spectral grid");
    }
    void load(const CartesianField& f) { std::copy(f.values.begin(), f.values.end(), real_.get()); }
    void store(CartesianField& f) const { std::copy(real_.get(), real_.get() + grid_.size(), f.values.begin()); }

    void apply_heat(double kappa, double dt, double scale) {
        for (std::size_t m = 0; m < grid_.ny; ++m)
            for (std::size_t i = 0; i < nxh_; ++i)
                spec_[m * nxh_ + i] *= scale * std::exp(-kappa * (kx_[i] * kx_[i] + ky_[m] * ky_[m]) * dt);
    }

    void scale_spec(double scale) {
        for (std::size_t n = 0; n < grid_.ny * nxh_; ++n) spec_[n] *= scale;
    }

    // Row j of the x-transform picks up exp(-i kx u(y_j) dt); the Nyquist
    // column is kept real (cosine factor) so the inverse stays consistent.
    void shift_rows(const VelocityField& vel, double dt, double scale) {
        for (std::size_t j = 0; j < grid_.ny; ++j) {
            const double disp = shear_profile(vel, grid_.y(j)) * dt;
            for (std::size_t i = 0; i < nxh_; ++i) {
                const double phase = kx_[i] * disp;
                Complex factor = (2 * i == grid_.nx) ? Complex(std::cos(phase), 0.0)
                                                     : Complex(std::cos(phase), -std::sin(phase));
                spec_[j * nxh_ + i] *= scale * factor;
            }
        }
    }

    CartesianGrid grid_;
    std::size_t nxh_;
    fft::RowTransform rows_;
    fft::ColumnTransform cols_;
    fft::Buffer<double> real_;
    fft::Buffer<Complex> spec_;
    fft::Buffer<Complex> work_;
    std::vector<double> kx_, ky_;
};

/// Semi-Lagrangian advection with cubic Lagrange interpolation at the
/// departure point x - dt u(x - dt/2 u(x)) (midpoint characteristic).
inline CartesianField advect_cubic(const CartesianField& in, const VelocityField& vel, double dt,
                                   unsigned threads = 1) {
    require_step(dt);
    const CartesianGrid& g = in.grid;
    validate(g);
    CartesianField out{g, std::vector<double>(g.size()), in.time + dt};
    const double dx = g.dx(), dy = g.dy();
    const auto nx = static_cast<std::ptrdiff_t>(g.nx);
    const auto ny = static_cast<std::ptrdiff_t>(g.ny);
    const auto wrap = [](std::ptrdiff_t k, std::ptrdiff_t n) { return ((k % n) + n) % n; };
    const bool shear = is_shear(vel);

    parallel_for(g.ny, threads, [&](std::size_t j) {
        for (std::size_t i = 0; i < g.nx; ++i) {
            const Vec2 p{g.x(i), g.y(j)};
            const Vec2 u1 = eval_velocity(vel, p);
            const Vec2 u2 = shear ? u1 : eval_velocity(vel, p - (0.5 * dt) * u1);
            const Vec2 dep = p - dt * u2;

            const double fx = dep.x / dx;
            const double bx = std::floor(fx);
            const auto wx = cubic_weights(fx - bx);
            const auto ix = static_cast<std::ptrdiff_t>(bx);

            double value = 0.0;
            if (shear) {
                const std::size_t row = j * g.nx;
                for (int a = 0; a < 4; ++a) value += wx[a] * in.values[row + wrap(ix - 1 + a, nx)];
            } else {
                const double fy = (dep.y + g.ly) / dy;
                const double by = std::floor(fy);
                const auto wy = cubic_weights(fy - by);
                const auto iy = static_cast<std::ptrdiff_t>(by);
                for (int b = 0; b < 4; ++b) {
                    const std::size_t row = static_cast<std::size_t>(wrap(iy - 1 + b, ny)) * g.nx;
                    double acc = 0.0;
                    for (int a = 0; a < 4; ++a) acc += wx[a] * in.values[row + wrap(ix - 1 + a, nx)];
                    value += wy[b] * acc;
                }
            }
            out.values[g.index(i, j)] = value;
        }
    });
    return out;
}

/// Reusable Cartesian stepper (plans cached).
class CartesianStepper {
public:
    explicit CartesianStepper(const CartesianGrid& grid, Interpolation interp = Interpolation::Auto,
                              unsigned threads = 1)
        : spectral_(grid), interp_(interp), threads_(threads) {}

    CartesianSpectral& spectral() noexcept { return spectral_; }

    void advect(CartesianField& f, const VelocityField& vel, double dt) {
        if (resolve(interp_, vel) == Interpolation::SpectralShift) {
            spectral_.advect_shift(f, vel, dt);
        } else {
            f = advect_cubic(f, vel, dt, threads_);
        }
    }

    void diffuse(CartesianField& f, double kappa, double dt) { spectral_.diffuse(f, kappa, dt); }

    /// Strang splitting: half diffusion, full advection, half diffusion.
    void strang(CartesianField& f, const VelocityField& vel, double kappa, double dt) {
        require_step(dt);
        if (kappa == 0.0) {
            advect(f, vel, dt);
            return;
        }
        if (std::holds_alternative<flow::Zero>(vel)) {
            diffuse(f, kappa, dt);
            return;
        }
        if (resolve(interp_, vel) == Interpolation::SpectralShift) {
            spectral_.strang_shear(f, vel, kappa, dt);
            return;
        }
        const double t0 = f.time;
        diffuse(f, kappa, 0.5 * dt);
        f = advect_cubic(f, vel, dt, threads_);
        diffuse(f, kappa, 0.5 * dt);
        f.time = t0 + dt;
    }

    EnergySample energy(const CartesianField& f) { return spectral_.energy(f); }

private:
    CartesianSpectral spectral_;
    Interpolation interp_;
    unsigned threads_;
};

inline CartesianField advect_semi_lagrangian(CartesianField f, const VelocityField& vel, double dt,
                                             Interpolation interp = Interpolation::CubicLagrange,
                                             unsigned threads = 1) {
    CartesianStepper(f.grid, interp, threads).advect(f, vel, dt);
    return f;
}

inline CartesianField diffuse_spectral(CartesianField f, double kappa, double dt) {
    CartesianSpectral(f.grid).diffuse(f, kappa, dt);
    return f;
}

inline CartesianField step_strang(CartesianField f, const VelocityField& vel, double kappa, double dt,
                                  Interpolation interp = Interpolation::Auto, unsigned threads = 1) {
    CartesianStepper(f.grid, interp, threads).strang(f, vel, kappa, dt);
    return f;
}

// ---------------------------------------------------------------------------
// Polar solver
// ---------------------------------------------------------------------------

/// Annular stepper for  d_t rho + r^q d_theta rho = kappa r^gamma Laplacian rho
/// with no-flux radial boundaries: exact angular shift per radius, then
/// backward Euler diffusion per angular Fourier mode (second-order
/// conservative differences in r).
class PolarStepper {
public:
    using Complex = fft::Complex;

    explicit PolarStepper(const PolarGrid& grid)
        : grid_((validate(grid), grid)),
          nh_(grid.ntheta / 2 + 1),
          rows_(grid.nr, grid.ntheta),
          real_(fft::allocate<double>(grid.size())),
          spec_(fft::allocate<Complex>(grid.nr * nh_)) {}

    const PolarGrid& grid() const noexcept { return grid_; }

    void step(PolarField& f, double q, const DiffusivityModel& diff, double dt) {
        require_step(dt);
        if (!(f.grid == grid_) || f.values.size() != grid_.size())
            throw ConfigError("field does not match the polar grid");
        if (!(q > 0.0)) throw ConfigError("polar step: q must be > 0");

        std::copy(f.values.begin(), f.values.end(), real_.get());
        rows_.forward(real_.get(), spec_.get());

        const double norm = 1.0 / static_cast<double>(grid_.ntheta);
        for (std::size_t i = 0; i < grid_.nr; ++i) {
            const double shift = std::pow(grid_.r(i), q) * dt;
            for (std::size_t m = 0; m < nh_; ++m) {
                const double phase = static_cast<double>(m) * shift;
                const Complex factor = (2 * m == grid_.ntheta) ? Complex(std::cos(phase), 0.0)
                                                               : Complex(std::cos(phase), -std::sin(phase));
                spec_[i * nh_ + m] *= norm * factor;
            }
        }

        if (base_kappa(diff) > 0.0) {
            for (std::size_t m = 0; m < nh_; ++m) implicit_radial(m, diff, dt);
        }

        rows_.backward(spec_.get(), real_.get());
        std::copy(real_.get(), real_.get() + grid_.size(), f.values.begin());
        f.time += dt;
    }

private:
    // (I - dt L_m) a_new = a_old, L_m a = kappa r^g [ (r a_r)_r / r - m^2 a / r^2 ],
    // with zero flux through the faces at r_min and r_max.
    void implicit_radial(std::size_t m, const DiffusivityModel& diff, double dt) {
        const std::size_t nr = grid_.nr;
        lower_.assign(nr, 0.0);
        diag_.assign(nr, 0.0);
        upper_.assign(nr, 0.0);
        const double dr = grid_.dr();
        const double m2 = static_cast<double>(m * m);
        for (std::size_t i = 0; i < nr; ++i) {
            const double r = grid_.r(i);
            const double k = eval_diffusivity_at_radius(diff, r) * dt;
            const double c = k / (r * dr * dr);
            const double face_lo = i > 0 ? (r - 0.5 * dr) : 0.0;
            const double face_hi = i + 1 < nr ? (r + 0.5 * dr) : 0.0;
            lower_[i] = -c * face_lo;
            upper_[i] = -c * face_hi;
            diag_[i] = 1.0 + c * (face_lo + face_hi) + k * m2 / (r * r);
        }
        // Thomas algorithm; the matrix is strictly diagonally dominant.
        rhs_.resize(nr);
        for (std::size_t i = 0; i < nr; ++i) rhs_[i] = spec_[i * nh_ + m];
        for (std::size_t i = 1; i < nr; ++i) {
            const double w = lower_[i] / diag_[i - 1];
            diag_[i] -= w * upper_[i - 1];
            rhs_[i] -= w * rhs_[i - 1];
        }
        rhs_[nr - 1] /= diag_[nr - 1];
        for (std::size_t i = nr - 1; i-- > 0;) rhs_[i] = (rhs_[i] - upper_[i] * rhs_[i + 1]) / diag_[i];
        for (std::size_t i = 0; i < nr; ++i) spec_[i * nh_ + m] = rhs_[i];
    }

    PolarGrid grid_;
    std::size_t nh_;
    fft::RowTransform rows_;
    fft::Buffer<double> real_;
    fft::Buffer<Complex> spec_;
    std::vector<double> lower_, diag_, upper_;
    std::vector<Complex> rhs_;
};

inline PolarField step_polar(PolarField f, double q, const DiffusivityModel& diff, double dt) {
    PolarStepper(f.grid).step(f, q, diff, dt);
    return f;
}

/// int rho r dr dtheta.
inline double polar_mass(const PolarField& f) {
    const PolarGrid& g = f.grid;
    double total = 0.0;
    for (std::size_t i = 0; i < g.nr; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < g.ntheta; ++j) row += f.values[g.index(i, j)];
        total += row * g.r(i);
    }
    return total * g.dr() * g.dtheta();
}

struct PolarEnergySample {
    double norm_sq = 0.0;
    double grad_sq = 0.0;
    double dissipation_rate = 0.0;  ///< int kappa r^gamma |grad rho|^2
};

/// Centred differences; the radial derivative uses mirror ghosts (no-flux).
inline PolarEnergySample polar_energy(const PolarField& f, const DiffusivityModel& diff) {
    const PolarGrid& g = f.grid;
    const double dr = g.dr(), dth = g.dtheta();
    PolarEnergySample e;
    for (std::size_t i = 0; i < g.nr; ++i) {
        const double r = g.r(i);
        const double k = eval_diffusivity_at_radius(diff, r);
        const std::size_t im = i == 0 ? 0 : i - 1;
        const std::size_t ip = i + 1 == g.nr ? i : i + 1;
        double s0 = 0.0, s1 = 0.0;
        for (std::size_t j = 0; j < g.ntheta; ++j) {
            const std::size_t jm = (j + g.ntheta - 1) % g.ntheta;
            const std::size_t jp = (j + 1) % g.ntheta;
            const double v = f.values[g.index(i, j)];
            const double dr_v = (f.values[g.index(ip, j)] - f.values[g.index(im, j)]) / (2.0 * dr);
            const double dt_v = (f.values[g.index(i, jp)] - f.values[g.index(i, jm)]) / (2.0 * dth * r);
            s0 += v * v;
            s1 += dr_v * dr_v + dt_v * dt_v;
        }
        const double w = r * dr * dth;
        e.norm_sq += s0 * w;
        e.grad_sq += s1 * w;
        e.dissipation_rate += k * s1 * w;
    }
    return e;
}

// ---------------------------------------------------------------------------
// Energy ledger
// ---------------------------------------------------------------------------

/// Time series for the balance 1/2 ||rho(t)||^2 + D(t) = 1/2 ||rho0||^2 with
/// D(t) = int_0^t kappa ||grad rho||^2 ds accumulated by the trapezoidal rule.
struct EnergyLedger {
    struct Window {
        double y_lo = 0.0;
        double y_hi = 0.0;
    };

    std::optional<Window> window;  ///< optional row window for a restricted dissipation
    std::vector<double> time;
    std::vector<double> norm_sq;
    std::vector<double> dissipation_rate;  ///< kappa_eff ||grad rho||^2
    std::vector<double> dissipation;       ///< D(t)
    std::vector<double> residual;          ///< R(t) = 1/2||rho||^2 + D - 1/2||rho0||^2
    std::vector<double> window_rate;
    std::vector<double> window_dissipation;

    bool empty() const noexcept { return time.empty(); }
    double initial_norm_sq() const { return norm_sq.front(); }

    void append(double t, double nsq, double rate, double wrate = 0.0) {
        double d = 0.0, wd = 0.0;
        if (!time.empty()) {
            const double h = t - time.back();
            d = dissipation.back() + 0.5 * h * (dissipation_rate.back() + rate);
            wd = window_dissipation.back() + 0.5 * h * (window_rate.back() + wrate);
        }
        time.push_back(t);
        norm_sq.push_back(nsq);
        dissipation_rate.push_back(rate);
        dissipation.push_back(d);
        residual.push_back(0.5 * nsq + d - 0.5 * norm_sq.front());
        window_rate.push_back(wrate);
        window_dissipation.push_back(wd);
    }
};

inline void energy_ledger_update(EnergyLedger& ledger, const CartesianField& f, double kappa_effective,
                                 CartesianSpectral& spectral) {
    const EnergySample e = spectral.energy(f);
    double wrate = 0.0;
    if (ledger.window) wrate = kappa_effective * spectral.windowed_grad_sq(f, ledger.window->y_lo, ledger.window->y_hi);
    ledger.append(f.time, e.norm_sq, kappa_effective * e.grad_sq, wrate);
}

inline void energy_ledger_update(EnergyLedger& ledger, const CartesianField& f, double kappa_effective) {
    CartesianSpectral spectral(f.grid);
    energy_ledger_update(ledger, f, kappa_effective, spectral);
}

inline void energy_ledger_update(EnergyLedger& ledger, const PolarField& f, const DiffusivityModel& diff) {
    const PolarEnergySample e = polar_energy(f, diff);
    ledger.append(f.time, e.norm_sq, e.dissipation_rate);
}

// ---------------------------------------------------------------------------
// Diagnostics
// ---------------------------------------------------------------------------

/// Amplitude A of A sin(x - s y t) fitted by projection over rows with
/// y_lo <= y_j < y_hi; the exact linear-shear solution has
/// A(t) = exp(-kappa (t + s^2 t^3 / 3)).
inline double kelvin_mode_amplitude(const CartesianField& f, double shear, double t, double y_lo, double y_hi) {
    const CartesianGrid& g = f.grid;
    std::complex<double> acc{0.0, 0.0};
    std::size_t rows = 0;
    for (std::size_t j = 0; j < g.ny; ++j) {
        const double y = g.y(j);
        if (y < y_lo || y >= y_hi) continue;
        ++rows;
        for (std::size_t i = 0; i < g.nx; ++i) {
            const double phase = g.x(i) - shear * y * t;
            acc += f.values[g.index(i, j)] * std::complex<double>(std::cos(phase), -std::sin(phase));
        }
    }
    if (rows == 0) throw ConfigError("kelvin_mode_amplitude: empty window");
    const double area = static_cast<double>(rows) * g.dy();
    return std::abs(acc) * g.dx() * g.dy() / (std::numbers::pi * area);
}

inline double l2_norm_sq(const CartesianField& f) {
    double s = 0.0;
    for (double v : f.values) s += v * v;
    return s * f.grid.dx() * f.grid.dy();
}

inline double l2_norm_sq(const PolarField& f) { return polar_energy(f, diffusivity::Isotropic{0.0}).norm_sq; }

}  // namespace enhdiff
