/* Copyright 2026 the viscoflux authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "viscoflux/grid.hpp"

#include <fftw3.h>

#include <cstring>
#include <map>
#include <tuple>

namespace vflux {

struct Grid::Plans {
    fftw_plan fwd = nullptr;
    fftw_plan bwd = nullptr;
    double* rbuf = nullptr;
    fftw_complex* cbuf = nullptr;

    ~Plans() {
        if (fwd) fftw_destroy_plan(fwd);
        if (bwd) fftw_destroy_plan(bwd);
        if (rbuf) fftw_free(rbuf);
        if (cbuf) fftw_free(cbuf);
    }
};

Grid::Grid(int n, int N, double L) : n_(n), N_(N), L_(L) {
    if (n != 2 && n != 3) throw ConfigError("grid: dimension must be 2 or 3");
    if (N < 8 || N % 2 != 0) throw ConfigError("grid: N must be even and >= 8");
    if ((N & (N - 1)) != 0) throw ConfigError("grid: N must be a power of two");
    if (!(L > 0.0)) throw ConfigError("grid: period L must be positive");

    nreal_ = 1;
    for (int d = 0; d < n; ++d) nreal_ *= std::size_t(N);
    nspec_ = nreal_ / std::size_t(N) * std::size_t(N / 2 + 1);

    cut_ = N / 3;
    dealias_keep_.assign(nspec_, 0);
    for (std::size_t s = 0; s < nspec_; ++s) {
        auto m = freq(s);
        bool keep = true;
        for (int d = 0; d < n; ++d)
            if (std::abs(m[d]) > cut_) keep = false;
        dealias_keep_[s] = keep ? 1 : 0;
    }

    plans_ = std::make_unique<Plans>();
    plans_->rbuf = fftw_alloc_real(nreal_);
    plans_->cbuf = fftw_alloc_complex(nspec_);
    if (n == 2) {
        plans_->fwd = fftw_plan_dft_r2c_2d(N, N, plans_->rbuf, plans_->cbuf, FFTW_ESTIMATE);
        plans_->bwd = fftw_plan_dft_c2r_2d(N, N, plans_->cbuf, plans_->rbuf, FFTW_ESTIMATE);
    } else {
        plans_->fwd = fftw_plan_dft_r2c_3d(N, N, N, plans_->rbuf, plans_->cbuf, FFTW_ESTIMATE);
        plans_->bwd = fftw_plan_dft_c2r_3d(N, N, N, plans_->cbuf, plans_->rbuf, FFTW_ESTIMATE);
    }
    if (!plans_->fwd || !plans_->bwd) throw ConfigError("grid: FFT plan creation failed");
}

Grid::~Grid() = default;

// read-mostly registry: one grid (and one set of FFT plans) per shape,
// so fields from independent call sites interoperate
std::shared_ptr<const Grid> Grid::make(int n, int N, double L) {
    struct Key {
        int n;
        int N;
        double L;
        bool operator<(const Key& o) const {
            return std::tie(n, N, L) < std::tie(o.n, o.N, o.L);
        }
    };
    static std::map<Key, std::shared_ptr<const Grid>> registry;
    static std::mutex registry_mutex;
    std::lock_guard<std::mutex> lock(registry_mutex);
    auto& slot = registry[Key{n, N, L}];
    if (!slot) slot = std::shared_ptr<const Grid>(new Grid(n, N, L));
    return slot;
}

void Grid::forward(const double* in, std::complex<double>* out) const {
    std::lock_guard<std::mutex> lock(fft_mutex_);
    std::memcpy(plans_->rbuf, in, nreal_ * sizeof(double));
    fftw_execute(plans_->fwd);
    const double scale = 1.0 / double(nreal_);
    const auto* c = reinterpret_cast<const std::complex<double>*>(plans_->cbuf);
    for (std::size_t s = 0; s < nspec_; ++s) out[s] = c[s] * scale;
}

void Grid::backward(const std::complex<double>* in, double* out) const {
    std::lock_guard<std::mutex> lock(fft_mutex_);
    std::memcpy(plans_->cbuf, in, nspec_ * sizeof(fftw_complex));
    fftw_execute(plans_->bwd);
    std::memcpy(out, plans_->rbuf, nreal_ * sizeof(double));
}

}  // namespace vflux
