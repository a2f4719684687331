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

#include <complex>
#include <functional>
#include <span>
#include <vector>

#include "viscoflux/grid.hpp"

namespace vflux {

using cplx = std::complex<double>;

enum class Rank { scalar, vector, matrix };

/// Real field on a periodic grid with lazily synchronized Fourier
/// coefficients.  A field carries 1, n or n*n components; matrix
/// components are stored row-major, comp(i,j) = i*n + j.
class Field {
  public:
    Field() = default;
    Field(GridPtr grid, Rank rank);

    static Field scalar(GridPtr g) { return Field(std::move(g), Rank::scalar); }
    static Field vector(GridPtr g) { return Field(std::move(g), Rank::vector); }
    static Field matrix(GridPtr g) { return Field(std::move(g), Rank::matrix); }

    bool empty() const { return grid_ == nullptr; }
    const Grid& grid() const { return *grid_; }
    const GridPtr& gridp() const { return grid_; }
    Rank rank() const { return rank_; }
    int ncomp() const { return ncomp_; }
    int comp_index(int i, int j) const { return i * grid_->dim() + j; }

    // synchronized read access
    std::span<const double> real(int c = 0) const;
    std::span<const cplx> spec(int c = 0) const;

    // write access; invalidates the other representation
    std::span<double> mutable_real(int c = 0);
    std::span<cplx> mutable_spec(int c = 0);

    void ensure_real() const;
    void ensure_spec() const;

    double mean(int c = 0) const;
    // relative size of the zero mode against the largest coefficient
    double mean_fraction() const;

    Field& operator+=(const Field& o);
    Field& operator-=(const Field& o);
    Field& operator*=(double a);

  private:
    GridPtr grid_;
    Rank rank_ = Rank::scalar;
    int ncomp_ = 0;
    mutable std::vector<std::vector<double>> real_;
    mutable std::vector<std::vector<cplx>> spec_;
    mutable bool real_ok_ = true;
    mutable bool spec_ok_ = true;
};

Field operator+(Field a, const Field& b);
Field operator-(Field a, const Field& b);
Field operator*(double a, Field f);

// ---- spectral calculus -------------------------------------------------

// multiply every component by a (real or complex) function of the
// integer frequency vector
Field apply_real_multiplier(const Field& f, const std::function<double(const std::array<int, 3>&)>& mult);
Field derivative(const Field& f, int dir);          // d/dx_dir, every component
Field gradient(const Field& s);                     // scalar -> vector
Field gradient_vec(const Field& v);                 // vector -> matrix, (grad u)_{ij} = d_j u_i
Field divergence(const Field& v);                   // vector -> scalar
Field divergence_mat(const Field& m);               // matrix -> vector, (div M)_i = d_j M_{ij}
Field laplacian(const Field& f);

// ---- pointwise algebra (physical space) --------------------------------

Field multiply(const Field& a, const Field& b);     // scalar*scalar -> scalar
Field scale_by_scalar(const Field& s, const Field& f);  // scalar field times any rank
Field dot(const Field& a, const Field& b);          // vector.vector -> scalar
Field matmul(const Field& A, const Field& B);       // matrix*matrix
Field matvec(const Field& A, const Field& x);       // matrix*vector
Field transpose(const Field& A);
Field advect(const Field& u, const Field& f);       // (u . grad) f, any rank
Field sym(const Field& A);                          // (A + A^T)/2
Field trace(const Field& A);                        // matrix -> scalar
Field identity_matrix(GridPtr g);                   // constant identity
Field add_scalar_times_identity(const Field& M, const Field& s, double c);  // M + c*s*Id

// map a scalar field through a pointwise function
Field pointwise(const Field& s, const std::function<double(double)>& fn);

// ---- dealiasing and symmetry -------------------------------------------

void dealias_inplace(Field& f);      // 2/3-rule truncation, zeroes Nyquist
void remove_mean_inplace(Field& f);
Field remove_mean(Field f);
// restore coeff(-xi) = conj(coeff(xi)) on the self-conjugate planes
void hermitian_symmetrize(Field& f);

// ---- reductions ---------------------------------------------------------

double l2_norm(const Field& f);            // sqrt(integral |f|^2 dx), all components
double linf_norm(const Field& f);
double max_abs_spec(const Field& f);
double l2_distance(const Field& a, const Field& b);

}  // namespace vflux
