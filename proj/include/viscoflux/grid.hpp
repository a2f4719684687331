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

#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <memory>
#include <mutex>
#include <vector>

#include "viscoflux/errors.hpp"

namespace vflux {

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

/// Periodic grid with N points per dimension in n = 2 or 3 dimensions.
///
/// Real samples are stored row-major on [0, L)^n.  Spectral data uses the
/// real-to-complex layout: the last dimension is halved to N/2+1 entries,
/// the remaining dimensions carry integer frequencies in [-N/2, N/2).
/// Physical wavenumbers are (2*pi/L) times the integer lattice vector.
class Grid : public std::enable_shared_from_this<Grid> {
  public:
    static std::shared_ptr<const Grid> make(int n, int N, double L = kTwoPi);
    ~Grid();

    Grid(const Grid&) = delete;
    Grid& operator=(const Grid&) = delete;

    int dim() const { return n_; }
    int points() const { return N_; }
    double period() const { return L_; }
    double dx() const { return L_ / N_; }
    // scale from integer lattice index to physical wavenumber
    double k_scale() const { return kTwoPi / L_; }

    std::size_t nreal() const { return nreal_; }
    std::size_t nspec() const { return nspec_; }

    // integer frequency vector of the stored spectral index s
    std::array<int, 3> freq(std::size_t s) const {
        std::array<int, 3> m{0, 0, 0};
        const int nh = N_ / 2 + 1;
        int last = static_cast<int>(s % nh);
        std::size_t rest = s / nh;
        if (n_ == 2) {
            m[0] = fold(static_cast<int>(rest));
            m[1] = last;
        } else {
            m[1] = fold(static_cast<int>(rest % N_));
            m[0] = fold(static_cast<int>(rest / N_));
            m[2] = last;
        }
        return m;
    }

    // |xi| in physical units for the stored spectral index s
    double xi_norm(std::size_t s) const {
        auto m = freq(s);
        double q = 0.0;
        for (int d = 0; d < n_; ++d) q += double(m[d]) * double(m[d]);
        return k_scale() * std::sqrt(q);
    }

    // Parseval weight: stored coefficients with a strictly interior last
    // index represent a conjugate pair.
    double conj_weight(std::size_t s) const {
        const int nh = N_ / 2 + 1;
        const int last = static_cast<int>(s % nh);
        return (last > 0 && last < N_ / 2) ? 2.0 : 1.0;
    }

    // true when the mode survives the 2/3-rule truncation
    bool keep_mode(std::size_t s) const { return dealias_keep_[s] != 0; }
    int dealias_cut() const { return cut_; }

    // largest integer-lattice |m| on the grid (corner mode)
    double max_lattice_norm() const { return std::sqrt(double(n_)) * (N_ / 2); }

    // unnormalized periodic coordinates of real index r
    std::array<double, 3> coords(std::size_t r) const {
        std::array<double, 3> x{0, 0, 0};
        std::size_t rest = r;
        for (int d = n_ - 1; d >= 0; --d) {
            x[d] = dx() * double(rest % N_);
            rest /= N_;
        }
        return x;
    }

    // transforms; forward output is normalized so that
    //   values[x] = sum_k coeff[k] exp(i k.x * 2*pi/N)
    void forward(const double* in, std::complex<double>* out) const;
    void backward(const std::complex<double>* in, double* out) const;

  private:
    Grid(int n, int N, double L);
    int fold(int i) const { return i <= N_ / 2 ? i : i - N_; }

    int n_ = 0;
    int N_ = 0;
    double L_ = 0.0;
    int cut_ = 0;  // 2/3-rule cutoff: keep |m_d| <= cut_
    std::size_t nreal_ = 0;
    std::size_t nspec_ = 0;
    std::vector<unsigned char> dealias_keep_;

    // FFTW plans operate on private scratch buffers
    struct Plans;
    std::unique_ptr<Plans> plans_;
    mutable std::mutex fft_mutex_;
};

using GridPtr = std::shared_ptr<const Grid>;

}  // namespace vflux
