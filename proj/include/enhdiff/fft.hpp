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

#include <complex>
#include <cstddef>
#include <memory>
#include <mutex>

#include <fftw3.h>

namespace enhdiff::fft {

using Complex = std::complex<double>;

struct FftwDeleter {
    void operator()(void* p) const noexcept { fftw_free(p); }
};
struct PlanDeleter {
    void operator()(fftw_plan p) const noexcept { fftw_destroy_plan(p); }
};

template <class T>
using Buffer = std::unique_ptr<T[], FftwDeleter>;
using Plan = std::unique_ptr<std::remove_pointer_t<fftw_plan>, PlanDeleter>;

template <class T>
Buffer<T> allocate(std::size_t n) {
    return Buffer<T>(static_cast<T*>(fftw_malloc(sizeof(T) * (n == 0 ? 1 : n))));
}

/// FFTW's planner is not re-entrant; every plan is created under this lock.
inline std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

inline fftw_complex* as_fftw(Complex* p) noexcept { return reinterpret_cast<fftw_complex*>(p); }

/// Batched real-to-complex transform along the contiguous axis of a
/// [rows][n] array; output is [rows][n/2+1].
class RowTransform {
public:
    RowTransform(std::size_t rows, std::size_t n) : rows_(rows), n_(n), nh_(n / 2 + 1) {
        auto real = allocate<double>(rows * n);
        auto spec = allocate<Complex>(rows * nh_);
        const int len = static_cast<int>(n);
        std::lock_guard lock(planner_mutex());
        forward_.reset(fftw_plan_many_dft_r2c(1, &len, static_cast<int>(rows), real.get(), nullptr, 1,
                                              static_cast<int>(n), as_fftw(spec.get()), nullptr, 1,
                                              static_cast<int>(nh_), FFTW_ESTIMATE));
        backward_.reset(fftw_plan_many_dft_c2r(1, &len, static_cast<int>(rows), as_fftw(spec.get()), nullptr, 1,
                                               static_cast<int>(nh_), real.get(), nullptr, 1,
                                               static_cast<int>(n), FFTW_ESTIMATE | FFTW_DESTROY_INPUT));
    }

    std::size_t half() const noexcept { return nh_; }

    /// Buffers must come from fft::allocate so alignment matches the plan.
    void forward(double* in, Complex* out) const { fftw_execute_dft_r2c(forward_.get(), in, as_fftw(out)); }
    /// Unnormalized: forward then backward scales by n. Destroys `in`.
    void backward(Complex* in, double* out) const { fftw_execute_dft_c2r(backward_.get(), as_fftw(in), out); }

private:
    std::size_t rows_, n_, nh_;
    Plan forward_, backward_;
};

/// In-place complex transform along the strided axis of a [n][cols] array.
class ColumnTransform {
public:
    ColumnTransform(std::size_t n, std::size_t cols) {
        auto buf = allocate<Complex>(n * cols);
        const int len = static_cast<int>(n);
        const int c = static_cast<int>(cols);
        std::lock_guard lock(planner_mutex());
        forward_.reset(fftw_plan_many_dft(1, &len, c, as_fftw(buf.get()), nullptr, c, 1, as_fftw(buf.get()),
                                          nullptr, c, 1, FFTW_FORWARD, FFTW_ESTIMATE));
        backward_.reset(fftw_plan_many_dft(1, &len, c, as_fftw(buf.get()), nullptr, c, 1, as_fftw(buf.get()),
                                           nullptr, c, 1, FFTW_BACKWARD, FFTW_ESTIMATE));
    }

    void forward(Complex* data) const { fftw_execute_dft(forward_.get(), as_fftw(data), as_fftw(data)); }
    void backward(Complex* data) const { fftw_execute_dft(backward_.get(), as_fftw(data), as_fftw(data)); }

private:
    Plan forward_, backward_;
};

}  // namespace enhdiff::fft
