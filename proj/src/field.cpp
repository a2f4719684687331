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

#include "viscoflux/field.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstring>
#include <stdexcept>

namespace vflux {

namespace {
int rank_ncomp(Rank r, int n) {
    switch (r) {
        case Rank::scalar: return 1;
        case Rank::vector: return n;
        case Rank::matrix: return n * n;
    }
    return 1;
}

void check_same_grid(const Field& a, const Field& b) {
    if (a.gridp().get() != b.gridp().get())
        throw std::invalid_argument("field operation: grid mismatch");
}
}  // namespace

Field::Field(GridPtr grid, Rank rank) : grid_(std::move(grid)), rank_(rank) {
    ncomp_ = rank_ncomp(rank, grid_->dim());
    real_.assign(ncomp_, std::vector<double>(grid_->nreal(), 0.0));
    spec_.assign(ncomp_, std::vector<cplx>(grid_->nspec(), cplx(0.0, 0.0)));
}

void Field::ensure_real() const {
    if (real_ok_) return;
    for (int c = 0; c < ncomp_; ++c) grid_->backward(spec_[c].data(), real_[c].data());
    real_ok_ = true;
}

void Field::ensure_spec() const {
    if (spec_ok_) return;
    for (int c = 0; c < ncomp_; ++c) grid_->forward(real_[c].data(), spec_[c].data());
    spec_ok_ = true;
}

std::span<const double> Field::real(int c) const {
    ensure_real();
    return {real_[c].data(), real_[c].size()};
}

std::span<const cplx> Field::spec(int c) const {
    ensure_spec();
    return {spec_[c].data(), spec_[c].size()};
}

std::span<double> Field::mutable_real(int c) {
    ensure_real();
    spec_ok_ = false;
    return {real_[c].data(), real_[c].size()};
}

std::span<cplx> Field::mutable_spec(int c) {
    ensure_spec();
    real_ok_ = false;
    return {spec_[c].data(), spec_[c].size()};
}

double Field::mean(int c) const {
    if (spec_ok_) return spec_[c][0].real();
    double s = 0.0;
    for (double v : real_[c]) s += v;
    return s / double(grid_->nreal());
}

double Field::mean_fraction() const {
    ensure_spec();
    double zero = 0.0, peak = 0.0;
    for (int c = 0; c < ncomp_; ++c) {
        zero = std::max(zero, std::abs(spec_[c][0]));
        for (const auto& z : spec_[c]) peak = std::max(peak, std::abs(z));
    }
    return peak > 0.0 ? zero / peak : 0.0;
}

Field& Field::operator+=(const Field& o) {
    check_same_grid(*this, o);
    assert(ncomp_ == o.ncomp_);
    if (spec_ok_ && o.spec_ok_) {
        for (int c = 0; c < ncomp_; ++c)
            for (std::size_t i = 0; i < spec_[c].size(); ++i) spec_[c][i] += o.spec_[c][i];
        real_ok_ = false;
    } else {
        ensure_real();
        o.ensure_real();
        for (int c = 0; c < ncomp_; ++c)
            for (std::size_t i = 0; i < real_[c].size(); ++i) real_[c][i] += o.real_[c][i];
        spec_ok_ = false;
    }
    return *this;
}

Field& Field::operator-=(const Field& o) {
    check_same_grid(*this, o);
    assert(ncomp_ == o.ncomp_);
    if (spec_ok_ && o.spec_ok_) {
        for (int c = 0; c < ncomp_; ++c)
            for (std::size_t i = 0; i < spec_[c].size(); ++i) spec_[c][i] -= o.spec_[c][i];
        real_ok_ = false;
    } else {
        ensure_real();
        o.ensure_real();
        for (int c = 0; c < ncomp_; ++c)
            for (std::size_t i = 0; i < real_[c].size(); ++i) real_[c][i] -= o.real_[c][i];
        spec_ok_ = false;
    }
    return *this;
}

Field& Field::operator*=(double a) {
    if (spec_ok_) {
        for (auto& comp : spec_)
            for (auto& z : comp) z *= a;
        real_ok_ = false;
    } else {
        for (auto& comp : real_)
            for (auto& v : comp) v *= a;
    }
    return *this;
}

Field operator+(Field a, const Field& b) { return a += b; }
Field operator-(Field a, const Field& b) { return a -= b; }
Field operator*(double a, Field f) { return f *= a; }

// ---- spectral calculus -------------------------------------------------

Field apply_real_multiplier(const Field& f, const std::function<double(const std::array<int, 3>&)>& mult) {
    const Grid& g = f.grid();
    Field out(f.gridp(), f.rank());
    std::vector<double> table(g.nspec());
    for (std::size_t s = 0; s < g.nspec(); ++s) table[s] = mult(g.freq(s));
    for (int c = 0; c < f.ncomp(); ++c) {
        auto in = f.spec(c);
        auto o = out.mutable_spec(c);
        for (std::size_t s = 0; s < in.size(); ++s) o[s] = table[s] * in[s];
    }
    return out;
}

Field derivative(const Field& f, int dir) {
    const Grid& g = f.grid();
    const double ks = g.k_scale();
    Field out(f.gridp(), f.rank());
    for (int c = 0; c < f.ncomp(); ++c) {
        auto in = f.spec(c);
        auto o = out.mutable_spec(c);
        for (std::size_t s = 0; s < in.size(); ++s) {
            auto m = g.freq(s);
            o[s] = cplx(0.0, ks * m[dir]) * in[s];
        }
    }
    return out;
}

Field gradient(const Field& sfield) {
    assert(sfield.rank() == Rank::scalar);
    const Grid& g = sfield.grid();
    Field out(sfield.gridp(), Rank::vector);
    const double ks = g.k_scale();
    auto in = sfield.spec(0);
    for (int d = 0; d < g.dim(); ++d) {
        auto o = out.mutable_spec(d);
        for (std::size_t s = 0; s < in.size(); ++s) {
            auto m = g.freq(s);
            o[s] = cplx(0.0, ks * m[d]) * in[s];
        }
    }
    return out;
}

Field gradient_vec(const Field& v) {
    assert(v.rank() == Rank::vector);
    const Grid& g = v.grid();
    const int n = g.dim();
    Field out(v.gridp(), Rank::matrix);
    const double ks = g.k_scale();
    for (int i = 0; i < n; ++i) {
        auto in = v.spec(i);
        for (int j = 0; j < n; ++j) {
            auto o = out.mutable_spec(i * n + j);
            for (std::size_t s = 0; s < in.size(); ++s) {
                auto m = g.freq(s);
                o[s] = cplx(0.0, ks * m[j]) * in[s];
            }
        }
    }
    return out;
}

Field divergence(const Field& v) {
    assert(v.rank() == Rank::vector);
    const Grid& g = v.grid();
    Field out(v.gridp(), Rank::scalar);
    const double ks = g.k_scale();
    auto o = out.mutable_spec(0);
    for (int d = 0; d < g.dim(); ++d) {
        auto in = v.spec(d);
        for (std::size_t s = 0; s < in.size(); ++s) {
            auto m = g.freq(s);
            o[s] += cplx(0.0, ks * m[d]) * in[s];
        }
    }
    return out;
}

Field divergence_mat(const Field& M) {
    assert(M.rank() == Rank::matrix);
    const Grid& g = M.grid();
    const int n = g.dim();
    Field out(M.gridp(), Rank::vector);
    const double ks = g.k_scale();
    for (int i = 0; i < n; ++i) {
        auto o = out.mutable_spec(i);
        for (int j = 0; j < n; ++j) {
            auto in = M.spec(i * n + j);
            for (std::size_t s = 0; s < in.size(); ++s) {
                auto m = g.freq(s);
                o[s] += cplx(0.0, ks * m[j]) * in[s];
            }
        }
    }
    return out;
}

Field laplacian(const Field& f) {
    const Grid& g = f.grid();
    const double ks2 = g.k_scale() * g.k_scale();
    return apply_real_multiplier(f, [&](const std::array<int, 3>& m) {
        double q = 0.0;
        for (int d = 0; d < g.dim(); ++d) q += double(m[d]) * double(m[d]);
        return -ks2 * q;
    });
}

// ---- pointwise algebra --------------------------------------------------

Field multiply(const Field& a, const Field& b) {
    check_same_grid(a, b);
    assert(a.rank() == Rank::scalar && b.rank() == Rank::scalar);
    Field out(a.gridp(), Rank::scalar);
    auto ra = a.real(0);
    auto rb = b.real(0);
    auto o = out.mutable_real(0);
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = ra[i] * rb[i];
    return out;
}

Field scale_by_scalar(const Field& s, const Field& f) {
    check_same_grid(s, f);
    assert(s.rank() == Rank::scalar);
    Field out(f.gridp(), f.rank());
    auto rs = s.real(0);
    for (int c = 0; c < f.ncomp(); ++c) {
        auto rf = f.real(c);
        auto o = out.mutable_real(c);
        for (std::size_t i = 0; i < o.size(); ++i) o[i] = rs[i] * rf[i];
    }
    return out;
}

Field dot(const Field& a, const Field& b) {
    check_same_grid(a, b);
    assert(a.rank() == Rank::vector && b.rank() == Rank::vector);
    Field out(a.gridp(), Rank::scalar);
    auto o = out.mutable_real(0);
    for (int d = 0; d < a.grid().dim(); ++d) {
        auto ra = a.real(d);
        auto rb = b.real(d);
        for (std::size_t i = 0; i < o.size(); ++i) o[i] += ra[i] * rb[i];
    }
    return out;
}

Field matmul(const Field& A, const Field& B) {
    check_same_grid(A, B);
    const int n = A.grid().dim();
    Field out(A.gridp(), Rank::matrix);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            auto o = out.mutable_real(i * n + j);
            for (int k = 0; k < n; ++k) {
                auto ra = A.real(i * n + k);
                auto rb = B.real(k * n + j);
                for (std::size_t p = 0; p < o.size(); ++p) o[p] += ra[p] * rb[p];
            }
        }
    return out;
}

Field matvec(const Field& A, const Field& x) {
    check_same_grid(A, x);
    const int n = A.grid().dim();
    Field out(A.gridp(), Rank::vector);
    for (int i = 0; i < n; ++i) {
        auto o = out.mutable_real(i);
        for (int j = 0; j < n; ++j) {
            auto ra = A.real(i * n + j);
            auto rx = x.real(j);
            for (std::size_t p = 0; p < o.size(); ++p) o[p] += ra[p] * rx[p];
        }
    }
    return out;
}

Field transpose(const Field& A) {
    assert(A.rank() == Rank::matrix);
    const int n = A.grid().dim();
    Field out(A.gridp(), Rank::matrix);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            auto in = A.real(j * n + i);
            auto o = out.mutable_real(i * n + j);
            std::copy(in.begin(), in.end(), o.begin());
        }
    return out;
}

Field advect(const Field& u, const Field& f) {
    check_same_grid(u, f);
    assert(u.rank() == Rank::vector);
    Field out(f.gridp(), f.rank());
    for (int c = 0; c < f.ncomp(); ++c) {
        auto o = out.mutable_real(c);
        for (int d = 0; d < u.grid().dim(); ++d) {
            Field df = derivative(f, d);
            auto rd = df.real(c);
            auto ru = u.real(d);
            for (std::size_t i = 0; i < o.size(); ++i) o[i] += ru[i] * rd[i];
        }
    }
    return out;
}

Field sym(const Field& A) {
    assert(A.rank() == Rank::matrix);
    const int n = A.grid().dim();
    Field out(A.gridp(), Rank::matrix);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            auto a = A.real(i * n + j);
            auto b = A.real(j * n + i);
            auto o = out.mutable_real(i * n + j);
            for (std::size_t p = 0; p < o.size(); ++p) o[p] = 0.5 * (a[p] + b[p]);
        }
    return out;
}

Field trace(const Field& A) {
    assert(A.rank() == Rank::matrix);
    const int n = A.grid().dim();
    Field out(A.gridp(), Rank::scalar);
    auto o = out.mutable_real(0);
    for (int i = 0; i < n; ++i) {
        auto a = A.real(i * n + i);
        for (std::size_t p = 0; p < o.size(); ++p) o[p] += a[p];
    }
    return out;
}

Field identity_matrix(GridPtr g) {
    Field out(g, Rank::matrix);
    const int n = g->dim();
    for (int i = 0; i < n; ++i) {
        auto o = out.mutable_real(i * n + i);
        std::fill(o.begin(), o.end(), 1.0);
    }
    return out;
}

Field add_scalar_times_identity(const Field& M, const Field& s, double c) {
    check_same_grid(M, s);
    const int n = M.grid().dim();
    Field out = M;
    auto rs = s.real(0);
    for (int i = 0; i < n; ++i) {
        auto o = out.mutable_real(i * n + i);
        for (std::size_t p = 0; p < o.size(); ++p) o[p] += c * rs[p];
    }
    return out;
}

Field pointwise(const Field& s, const std::function<double(double)>& fn) {
    assert(s.rank() == Rank::scalar);
    Field out(s.gridp(), Rank::scalar);
    auto in = s.real(0);
    auto o = out.mutable_real(0);
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = fn(in[i]);
    return out;
}

// ---- dealiasing and symmetry ---------------------------------------------

void dealias_inplace(Field& f) {
    const Grid& g = f.grid();
    for (int c = 0; c < f.ncomp(); ++c) {
        auto sp = f.mutable_spec(c);
        for (std::size_t s = 0; s < sp.size(); ++s)
            if (!g.keep_mode(s)) sp[s] = cplx(0.0, 0.0);
    }
}

void remove_mean_inplace(Field& f) {
    for (int c = 0; c < f.ncomp(); ++c) f.mutable_spec(c)[0] = cplx(0.0, 0.0);
}

Field remove_mean(Field f) {
    remove_mean_inplace(f);
    return f;
}

void hermitian_symmetrize(Field& f) {
    const Grid& g = f.grid();
    const int N = g.points();
    const int n = g.dim();
    const int nh = N / 2 + 1;
    auto wrap = [N](int i) { return ((i % N) + N) % N; };
    for (int c = 0; c < f.ncomp(); ++c) {
        auto sp = f.mutable_spec(c);
        // on the self-conjugate planes (last index 0 or N/2) the partner
        // -m lives in the stored array; average the pair
        for (std::size_t s = 0; s < sp.size(); ++s) {
            const int last = int(s % nh);
            if (last != 0 && last != N / 2) continue;
            auto m = g.freq(s);
            std::size_t partner;
            if (n == 2) {
                partner = std::size_t(wrap(-m[0])) * nh + last;
            } else {
                partner = (std::size_t(wrap(-m[0])) * N + wrap(-m[1])) * nh + last;
            }
            if (partner == s) {
                sp[s] = cplx(sp[s].real(), 0.0);
            } else if (partner > s) {
                cplx avg = 0.5 * (sp[s] + std::conj(sp[partner]));
                sp[s] = avg;
                sp[partner] = std::conj(avg);
            }
        }
    }
}

// ---- reductions -----------------------------------------------------------

double l2_norm(const Field& f) {
    const Grid& g = f.grid();
    double vol = std::pow(g.period(), g.dim());
    double acc = 0.0;
    for (int c = 0; c < f.ncomp(); ++c) {
        auto sp = f.spec(c);
        for (std::size_t s = 0; s < sp.size(); ++s) acc += g.conj_weight(s) * std::norm(sp[s]);
    }
    return std::sqrt(vol * acc);
}

double linf_norm(const Field& f) {
    double m = 0.0;
    for (int c = 0; c < f.ncomp(); ++c) {
        auto r = f.real(c);
        for (double v : r) m = std::max(m, std::abs(v));
    }
    return m;
}

double max_abs_spec(const Field& f) {
    double m = 0.0;
    for (int c = 0; c < f.ncomp(); ++c) {
        auto sp = f.spec(c);
        for (const auto& z : sp) m = std::max(m, std::abs(z));
    }
    return m;
}

double l2_distance(const Field& a, const Field& b) {
    Field d = a;
    d -= b;
    return l2_norm(d);
}

}  // namespace vflux
