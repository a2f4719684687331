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

#include "viscoflux/solver.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>

namespace vflux {

static_assert(std::endian::native == std::endian::little,
              "snapshot format assumes a little-endian host");

const char* sim_mode_name(SimMode m) {
    switch (m) {
        case SimMode::primitive: return "primitive";
        case SimMode::perturbation: return "perturbation";
        case SimMode::linear: return "linear";
    }
    return "?";
}

const char* scheme_name(Scheme s) {
    return s == Scheme::etdrk2 ? "etdrk2" : "imex_bdf2";
}

void SimConfig::validate() const {
    if (n != 2 && n != 3) throw ConfigError("config: n must be 2 or 3");
    if (!(dt > 0.0)) throw ConfigError("config: dt must be positive");
    if (t_end < 0.0) throw ConfigError("config: t_end must be nonnegative");
    if (!(output_dt > 0.0)) throw ConfigError("config: output_dt must be positive");
    if (!(cfl > 0.0)) throw ConfigError("config: cfl must be positive");
    if (init.kmin < 1 || init.kmax < init.kmin)
        throw ConfigError("config: initial band must satisfy 1 <= kmin <= kmax");
    if (init.kmax >= N / 2) throw ConfigError("config: requested band exceeds Nyquist");
    if (dealias && init.kmax > N / 3)
        throw ConfigError("config: initial band exceeds the 2/3-rule cutoff");
    if (init.eta < 0.0) throw ConfigError("config: eta must be nonnegative");
    fluid.validate();
}

double SimConfig::resolved_R0() const { return R0 > 0.0 ? R0 : fluid.default_R0(); }

namespace {

double phi1_scalar(double z) {
    if (std::abs(z) < 1e-5) return 1.0 + z / 2.0 + z * z / 6.0 + z * z * z / 24.0;
    return std::expm1(z) / z;
}

double phi2_scalar(double z) {
    if (std::abs(z) < 1e-4) return 0.5 + z / 6.0 + z * z / 24.0 + z * z * z / 120.0;
    return (std::expm1(z) - z) / (z * z);
}

// apply f(A h) branchwise to a vector field: the viscous operator is
// -mu0 k^2 on the transverse part and -(lambda0+2mu0) k^2 on the
// longitudinal part of every mode
template <typename Fn>
Field visc_phi_apply(const Field& v, double h, const FluidParams& par, Fn&& fn) {
    const Grid& g = v.grid();
    const int n = g.dim();
    Field out(v.gridp(), Rank::vector);
    std::vector<std::span<const cplx>> in;
    std::vector<std::span<cplx>> o;
    for (int d = 0; d < n; ++d) in.push_back(v.spec(d));
    for (int d = 0; d < n; ++d) o.push_back(out.mutable_spec(d));
    const double ks = g.k_scale();
    for (std::size_t s = 0; s < g.nspec(); ++s) {
        auto m = g.freq(s);
        double q = 0.0;
        for (int d = 0; d < n; ++d) q += double(m[d]) * double(m[d]);
        if (q == 0.0) {
            const double f0 = fn(0.0);
            for (int d = 0; d < n; ++d) o[std::size_t(d)][s] = f0 * in[std::size_t(d)][s];
            continue;
        }
        const double k2 = ks * ks * q;
        const double ft = fn(-par.mu0 * k2 * h);
        const double fl = fn(-par.nu_perp() * k2 * h);
        cplx par_amp(0.0, 0.0);
        for (int d = 0; d < n; ++d) par_amp += double(m[d]) * in[std::size_t(d)][s];
        par_amp /= q;
        for (int d = 0; d < n; ++d) {
            const cplx longi = double(m[d]) * par_amp;
            o[std::size_t(d)][s] = ft * (in[std::size_t(d)][s] - longi) + fl * longi;
        }
    }
    return out;
}

struct PertRhsFields {
    Field p, u, tau;
};

PertRhsFields pert_nonlinear(const PerturbationState& st, const FluidParams& par, bool dealias) {
    PerturbationRhs rhs = rhs_perturbation(st, par);
    Field adv_p = advect(st.u, st.p);
    Field adv_tau = advect(st.u, st.tau);
    if (dealias) {
        dealias_inplace(adv_p);
        dealias_inplace(adv_tau);
    }
    PertRhsFields out;
    out.p = rhs.F1 - adv_p;
    out.u = rhs.F2;
    out.tau = rhs.F3 - adv_tau;
    return out;
}

struct PrimRhsFields {
    Field rho, u, F;
};

PrimRhsFields prim_nonlinear(const PrimitiveState& st, const FluidParams& par, bool dealias,
                             bool mutate_gradient) {
    PrimRhsFields out;

    Field rho_u = scale_by_scalar(st.rho, st.u);
    if (dealias) dealias_inplace(rho_u);
    out.rho = -1.0 * divergence(rho_u);

    Field gradu = gradient_vec(st.u);
    Field adv_u = advect(st.u, st.u);

    Field tau = tau_from_F(st.F, par.delta_det);
    if (dealias) dealias_inplace(tau);
    Field div_tau = divergence_mat(tau);

    Field inv_rho = pointwise(st.rho, [](double r) { return 1.0 / r; });
    Field Au = a_operator(st.u, par);

    // (1/rho - 1) A u  +  (alpha/rho) div(F F^T/det F)  -  (1/rho) grad Pi
    Field visc_corr = scale_by_scalar(pointwise(st.rho, [](double r) { return 1.0 / r - 1.0; }), Au);
    Field elastic = scale_by_scalar(inv_rho, div_tau);
    elastic *= par.alpha;
    Field pfac = pointwise(st.rho, [&](double r) { return std::pow(r, par.gamma - 2.0); });
    Field press = scale_by_scalar(pfac, gradient(st.rho));

    out.u = visc_corr + elastic - adv_u - press;
    if (!par.constant_viscosity()) {
        Field a = pointwise(st.rho, [](double r) { return r - 1.0; });
        Field mu_t = pointwise(a, [&](double v) { return par.mu_tilde(v); });
        Field la_t = pointwise(a, [&](double v) { return par.lambda_tilde(v); });
        Field D = sym(gradu);
        Field M = scale_by_scalar(mu_t, D);
        M *= 2.0;
        M = add_scalar_times_identity(M, multiply(la_t, divergence(st.u)), 1.0);
        out.u += scale_by_scalar(inv_rho, divergence_mat(M));
    }
    if (dealias) dealias_inplace(out.u);

    Field adv_F = advect(st.u, st.F);
    Field stretch = mutate_gradient ? matmul(transpose(gradu), st.F) : matmul(gradu, st.F);
    out.F = stretch - adv_F;
    if (dealias) dealias_inplace(out.F);
    return out;
}

void check_finite(const Field& f, long step) {
    for (int c = 0; c < f.ncomp(); ++c) {
        auto sp = f.spec(c);
        for (const auto& z : sp)
            if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) {
                std::ostringstream msg;
                msg << "instability: NaN/Inf detected at step " << step;
                throw NumericsError(msg.str());
            }
    }
}

}  // namespace

// per-mode matrices for the exactly-integrated constant-coefficient
// linearization of the perturbation system, realified via u -> i u
struct Stepper::PertCache {
    double h = 0.0;
    int m = 0;
    std::vector<std::size_t> modes;
    std::vector<double> E, P1, P2;  // modes.size() blocks of m x m, row-major
    std::vector<double> Binv;       // (3/2 I - h L)^{-1}, built for imex_bdf2
};

Stepper::Stepper(SimConfig cfg)
    : cfg_(std::move(cfg)),
      grid_((cfg_.validate(), Grid::make(cfg_.n, cfg_.N, cfg_.L))),
      part_(build_partition(grid_, cfg_.resolved_R0())),
      prop_(grid_, cfg_.fluid) {}

namespace {

// real linearization matrix at physical frequency xi (variables p, i u, tau)
Eigen::MatrixXd linearization_matrix(const std::array<double, 3>& xi, int n,
                                     const FluidParams& par) {
    const int m = 1 + n + n * n;
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(m, m);
    double k2 = 0.0;
    for (int d = 0; d < n; ++d) k2 += xi[std::size_t(d)] * xi[std::size_t(d)];
    for (int j = 0; j < n; ++j) L(0, 1 + j) = -xi[std::size_t(j)];
    for (int i = 0; i < n; ++i) {
        L(1 + i, 0) = xi[std::size_t(i)];
        for (int j = 0; j < n; ++j)
            L(1 + i, 1 + j) = -(par.lambda0 + par.mu0) * xi[std::size_t(i)] * xi[std::size_t(j)] -
                              (i == j ? par.mu0 * k2 : 0.0);
        for (int j = 0; j < n; ++j) L(1 + i, 1 + n + i * n + j) = -par.alpha * xi[std::size_t(j)];
    }
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const int row = 1 + n + i * n + j;
            L(row, 1 + i) += xi[std::size_t(j)];
            L(row, 1 + j) += xi[std::size_t(i)];
            if (i == j)
                for (int kk = 0; kk < n; ++kk) L(row, 1 + kk) -= xi[std::size_t(kk)];
        }
    return L;
}

}  // namespace

const Stepper::PertCache& Stepper::pert_cache(double h) const {
    if (pcache_ && pcache_->h == h) return *pcache_;
    auto cache = std::make_shared<PertCache>();
    cache->h = h;
    const int n = grid_->dim();
    const int m = 1 + n + n * n;
    cache->m = m;
    for (std::size_t s = 0; s < grid_->nspec(); ++s)
        if (!cfg_.dealias || grid_->keep_mode(s)) cache->modes.push_back(s);

    const std::size_t nm = cache->modes.size();
    cache->E.assign(nm * m * m, 0.0);
    cache->P1.assign(nm * m * m, 0.0);
    cache->P2.assign(nm * m * m, 0.0);
    const bool bdf = cfg_.scheme == Scheme::imex_bdf2;
    if (bdf) cache->Binv.assign(nm * m * m, 0.0);

    const double ks = grid_->k_scale();
    Eigen::MatrixXd W = Eigen::MatrixXd::Zero(3 * m, 3 * m);
    for (std::size_t idx = 0; idx < nm; ++idx) {
        auto mm = grid_->freq(cache->modes[idx]);
        std::array<double, 3> xi{ks * mm[0], ks * mm[1], ks * mm[2]};
        Eigen::MatrixXd L = linearization_matrix(xi, n, cfg_.fluid);
        W.setZero();
        W.topLeftCorner(m, m) = L * h;
        W.block(0, m, m, m) = Eigen::MatrixXd::Identity(m, m) * h;
        W.block(m, 2 * m, m, m) = Eigen::MatrixXd::Identity(m, m) * h;
        Eigen::MatrixXd X = W.exp();
        for (int r = 0; r < m; ++r)
            for (int c = 0; c < m; ++c) {
                cache->E[(idx * m + r) * m + c] = X(r, c);
                cache->P1[(idx * m + r) * m + c] = X(r, m + c) / h;
                cache->P2[(idx * m + r) * m + c] = X(r, 2 * m + c) / (h * h);
            }
        if (bdf) {
            Eigen::MatrixXd B = 1.5 * Eigen::MatrixXd::Identity(m, m) - h * L;
            Eigen::MatrixXd Bi = B.inverse();
            for (int r = 0; r < m; ++r)
                for (int c = 0; c < m; ++c) cache->Binv[(idx * m + r) * m + c] = Bi(r, c);
        }
    }
    pcache_ = std::move(cache);
    return *pcache_;
}

namespace {

// gather the (p, i u, tau) coefficients of one mode
struct ModeVec {
    std::array<cplx, 13> v{};
};

struct PertView {
    std::vector<std::span<const cplx>> comps;
    int n = 0;

    explicit PertView(const PerturbationState& st) : n(st.p.grid().dim()) {
        comps.push_back(st.p.spec(0));
        for (int d = 0; d < n; ++d) comps.push_back(st.u.spec(d));
        for (int c = 0; c < n * n; ++c) comps.push_back(st.tau.spec(c));
    }
    ModeVec gather(std::size_t s) const {
        ModeVec y;
        const int m = 1 + n + n * n;
        for (int c = 0; c < m; ++c) y.v[std::size_t(c)] = comps[std::size_t(c)][s];
        for (int d = 0; d < n; ++d) y.v[std::size_t(1 + d)] *= cplx(0.0, 1.0);  // u -> i u
        return y;
    }
};

struct PertOut {
    std::vector<std::span<cplx>> comps;
    int n = 0;

    explicit PertOut(PerturbationState& st) : n(st.p.grid().dim()) {
        comps.push_back(st.p.mutable_spec(0));
        for (int d = 0; d < n; ++d) comps.push_back(st.u.mutable_spec(d));
        for (int c = 0; c < n * n; ++c) comps.push_back(st.tau.mutable_spec(c));
    }
    void scatter(std::size_t s, const ModeVec& y) {
        const int m = 1 + n + n * n;
        for (int c = 0; c < m; ++c) {
            cplx z = y.v[std::size_t(c)];
            if (c >= 1 && c <= n) z *= cplx(0.0, -1.0);  // i u -> u
            comps[std::size_t(c)][s] = z;
        }
    }
};

ModeVec matvec(const std::vector<double>& M, std::size_t blk, int m, const ModeVec& y) {
    ModeVec out;
    const double* base = M.data() + blk * std::size_t(m) * std::size_t(m);
    for (int r = 0; r < m; ++r) {
        cplx acc(0.0, 0.0);
        const double* row = base + std::size_t(r) * m;
        for (int c = 0; c < m; ++c) acc += row[c] * y.v[std::size_t(c)];
        out.v[std::size_t(r)] = acc;
    }
    return out;
}

PerturbationState fresh_pert(const GridPtr& g) {
    PerturbationState st;
    st.a = Field(g, Rank::scalar);
    st.p = Field(g, Rank::scalar);
    st.tau = Field(g, Rank::matrix);
    st.u = Field(g, Rank::vector);
    return st;
}

void refresh_a(PerturbationState& st, const FluidParams& par) {
    st.a = pointwise(st.p, [&](double v) { return par.a_of_p(v); });
}

}  // namespace

void Stepper::advance_perturbation(SimState& state, double h) const {
    const PertCache& cache = pert_cache(h);
    const int m = cache.m;
    PerturbationState& st = state.pert;

    if (cfg_.scheme == Scheme::imex_bdf2 && bdf_primed_ && bdf_h_ == h) {
        PertRhsFields N = pert_nonlinear(st, cfg_.fluid, cfg_.dealias);
        PerturbationState next = fresh_pert(grid_);
        {
            PertView yv(st);
            PerturbationState ncur = fresh_pert(grid_);
            ncur.p = N.p;
            ncur.u = N.u;
            ncur.tau = N.tau;
            PertView nv(ncur);

            PerturbationState yprev = fresh_pert(grid_);
            yprev.p = bdf_prev_y_p_;
            yprev.u = bdf_prev_y_u_;
            yprev.tau = bdf_prev_y_tau_;
            PertView ypv(yprev);
            PerturbationState nprev = fresh_pert(grid_);
            nprev.p = bdf_prev_n_p_;
            nprev.u = bdf_prev_n_u_;
            nprev.tau = bdf_prev_n_tau_;
            PertView npv(nprev);

            PertOut out(next);
            for (std::size_t idx = 0; idx < cache.modes.size(); ++idx) {
                const std::size_t s = cache.modes[idx];
                ModeVec y = yv.gather(s), yp = ypv.gather(s);
                ModeVec nn = nv.gather(s), np = npv.gather(s);
                ModeVec rhs;
                for (int c = 0; c < m; ++c)
                    rhs.v[std::size_t(c)] = 2.0 * y.v[std::size_t(c)] -
                                            0.5 * yp.v[std::size_t(c)] +
                                            h * (2.0 * nn.v[std::size_t(c)] - np.v[std::size_t(c)]);
                out.scatter(s, matvec(cache.Binv, idx, m, rhs));
            }
        }
        bdf_prev_y_p_ = st.p;
        bdf_prev_y_u_ = st.u;
        bdf_prev_y_tau_ = st.tau;
        bdf_prev_n_p_ = N.p;
        bdf_prev_n_u_ = N.u;
        bdf_prev_n_tau_ = N.tau;
        st.p = std::move(next.p);
        st.u = std::move(next.u);
        st.tau = std::move(next.tau);
        refresh_a(st, cfg_.fluid);
        return;
    }

    // ETDRK2 step (also primes the BDF2 window)
    PertRhsFields N = pert_nonlinear(st, cfg_.fluid, cfg_.dealias);
    PerturbationState pred = fresh_pert(grid_);
    {
        PertView yv(st);
        PerturbationState ncur = fresh_pert(grid_);
        ncur.p = N.p;
        ncur.u = N.u;
        ncur.tau = N.tau;
        PertView nv(ncur);
        PertOut out(pred);
        for (std::size_t idx = 0; idx < cache.modes.size(); ++idx) {
            const std::size_t s = cache.modes[idx];
            ModeVec y = yv.gather(s);
            ModeVec nn = nv.gather(s);
            ModeVec a = matvec(cache.E, idx, m, y);
            ModeVec b = matvec(cache.P1, idx, m, nn);
            for (int c = 0; c < m; ++c) a.v[std::size_t(c)] += h * b.v[std::size_t(c)];
            out.scatter(s, a);
        }
    }
    refresh_a(pred, cfg_.fluid);
    PertRhsFields Na = pert_nonlinear(pred, cfg_.fluid, cfg_.dealias);

    PerturbationState next = fresh_pert(grid_);
    {
        PertView av(pred);
        PerturbationState dn = fresh_pert(grid_);
        dn.p = Na.p - N.p;
        dn.u = Na.u - N.u;
        dn.tau = Na.tau - N.tau;
        PertView dv(dn);
        PertOut out(next);
        for (std::size_t idx = 0; idx < cache.modes.size(); ++idx) {
            const std::size_t s = cache.modes[idx];
            ModeVec a = av.gather(s);
            ModeVec d = dv.gather(s);
            ModeVec corr = matvec(cache.P2, idx, m, d);
            for (int c = 0; c < m; ++c) a.v[std::size_t(c)] += h * corr.v[std::size_t(c)];
            out.scatter(s, a);
        }
    }

    if (cfg_.scheme == Scheme::imex_bdf2) {
        bdf_prev_y_p_ = st.p;
        bdf_prev_y_u_ = st.u;
        bdf_prev_y_tau_ = st.tau;
        bdf_prev_n_p_ = N.p;
        bdf_prev_n_u_ = N.u;
        bdf_prev_n_tau_ = N.tau;
        bdf_primed_ = true;
        bdf_h_ = h;
    }

    st.p = std::move(next.p);
    st.u = std::move(next.u);
    st.tau = std::move(next.tau);
    refresh_a(st, cfg_.fluid);
}

void Stepper::advance_primitive(SimState& state, double h) const {
    PrimitiveState& st = state.prim;
    const FluidParams& par = cfg_.fluid;

    if (cfg_.scheme == Scheme::imex_bdf2 && bdf_primed_ && bdf_h_ == h) {
        PrimRhsFields N =
            prim_nonlinear(st, par, cfg_.dealias, cfg_.mutate_gradient_convention);
        auto combine = [&](const Field& y, const Field& yp, const Field& nn, const Field& np) {
            Field rhs = 2.0 * y;
            rhs -= 0.5 * Field(yp);
            rhs += h * (2.0 * Field(nn) - Field(np));
            return rhs;
        };
        Field rrho = combine(st.rho, bdf_prev_y_p_, N.rho, bdf_prev_n_p_);
        Field ru = combine(st.u, bdf_prev_y_u_, N.u, bdf_prev_n_u_);
        Field rF = combine(st.F, bdf_prev_y_tau_, N.F, bdf_prev_n_tau_);

        bdf_prev_y_p_ = st.rho;
        bdf_prev_y_u_ = st.u;
        bdf_prev_y_tau_ = st.F;
        bdf_prev_n_p_ = N.rho;
        bdf_prev_n_u_ = N.u;
        bdf_prev_n_tau_ = N.F;

        st.rho = (1.0 / 1.5) * rrho;
        st.F = (1.0 / 1.5) * rF;
        st.u = visc_phi_apply(ru, h, par,
                              [&](double z) { return 1.0 / (1.5 - z); });
        return;
    }

    PrimRhsFields N = prim_nonlinear(st, par, cfg_.dealias, cfg_.mutate_gradient_convention);

    PrimitiveState pred;
    pred.rho = st.rho + h * Field(N.rho);
    pred.F = st.F + h * Field(N.F);
    pred.u = visc_phi_apply(st.u, h, par, [](double z) { return std::exp(z); }) +
             h * visc_phi_apply(N.u, h, par, phi1_scalar);

    PrimRhsFields Na = prim_nonlinear(pred, par, cfg_.dealias, cfg_.mutate_gradient_convention);

    if (cfg_.scheme == Scheme::imex_bdf2) {
        bdf_prev_y_p_ = st.rho;
        bdf_prev_y_u_ = st.u;
        bdf_prev_y_tau_ = st.F;
        bdf_prev_n_p_ = N.rho;
        bdf_prev_n_u_ = N.u;
        bdf_prev_n_tau_ = N.F;
        bdf_primed_ = true;
        bdf_h_ = h;
    }

    st.rho = pred.rho + (0.5 * h) * (Field(Na.rho) - Field(N.rho));
    st.F = pred.F + (0.5 * h) * (Field(Na.F) - Field(N.F));
    st.u = pred.u + h * visc_phi_apply(Na.u - N.u, h, par, phi2_scalar);
}

void Stepper::advance(SimState& state, double h) const {
    if (!(h > 0.0)) throw ConfigError("step: dt must be positive");
    switch (state.mode) {
        case SimMode::linear: {
            auto [tn, un] = prop_.apply(state.theta, state.u_lin, h);
            state.theta = std::move(tn);
            state.u_lin = std::move(un);
            break;
        }
        case SimMode::perturbation:
            advance_perturbation(state, h);
            check_finite(state.pert.u, steps_);
            check_finite(state.pert.p, steps_);
            break;
        case SimMode::primitive:
            advance_primitive(state, h);
            check_finite(state.prim.u, steps_);
            check_finite(state.prim.rho, steps_);
            break;
    }
    ++steps_;
}

double Stepper::cfl_cap(const SimState& state) const {
    const Field* u = nullptr;
    switch (state.mode) {
        case SimMode::primitive: u = &state.prim.u; break;
        case SimMode::perturbation: u = &state.pert.u; break;
        case SimMode::linear: u = &state.u_lin; break;
    }
    const double umax = std::max(1.0, linf_norm(*u));
    return cfg_.cfl * grid_->dx() / umax;
}

// ---- initial data ---------------------------------------------------------

namespace {

Field seed_field(const GridPtr& g, Rank rank, int kmin, int kmax, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    Field f(g, rank);
    for (int c = 0; c < f.ncomp(); ++c) {
        auto sp = f.mutable_spec(c);
        for (std::size_t s = 0; s < sp.size(); ++s) {
            auto m = g->freq(s);
            double q = 0.0;
            for (int d = 0; d < g->dim(); ++d) q += double(m[d]) * double(m[d]);
            const double r = std::sqrt(q);
            if (q == 0.0 || r < kmin || r > kmax) continue;
            const double amp = uni(rng);
            const double ph = kTwoPi * uni(rng);
            sp[s] = std::polar(amp, ph);
        }
    }
    hermitian_symmetrize(f);
    remove_mean_inplace(f);
    const double m = linf_norm(f);
    if (m > 0.0) f *= 1.0 / m;
    return f;
}

struct SeedFields {
    Field a_hat, G_hat, u_hat;
};

// Data on the constraint manifold rho det F = 1, div(rho F^T) = 0.  The
// columns of M = rho F are built as identity plus exact spectral curls
// (stream functions in 2D, vector potentials in 3D), which makes the
// divergence vanish to rounding; rho = (det M)^{1/(n-1)} then closes the
// determinant constraint pointwise.
PrimitiveState build_compat_primitive(const GridPtr& g, const SeedFields& seeds, double c) {
    const int n = g->dim();
    Field M = identity_matrix(g);
    if (n == 2) {
        for (int i = 0; i < n; ++i) {
            Field psi(g, Rank::scalar);
            {
                auto o = psi.mutable_spec(0);
                auto in = seeds.G_hat.spec(i);
                for (std::size_t s = 0; s < o.size(); ++s) o[s] = c * in[s];
            }
            Field d1 = derivative(psi, 0);
            Field d2 = derivative(psi, 1);
            auto m1 = M.mutable_real(0 * n + i);
            auto m2 = M.mutable_real(1 * n + i);
            auto r1 = d2.real(0);
            auto r2 = d1.real(0);
            for (std::size_t p = 0; p < m1.size(); ++p) {
                m1[p] -= r1[p];
                m2[p] += r2[p];
            }
        }
    } else {
        for (int i = 0; i < n; ++i) {
            Field A(g, Rank::vector);
            for (int d = 0; d < n; ++d) {
                auto o = A.mutable_spec(d);
                auto in = seeds.G_hat.spec(i * n + d);
                for (std::size_t s = 0; s < o.size(); ++s) o[s] = c * in[s];
            }
            // curl A
            for (int j = 0; j < n; ++j) {
                const int j1 = (j + 1) % 3, j2 = (j + 2) % 3;
                Field curl_j = derivative(A, j1);
                Field other = derivative(A, j2);
                auto mj = M.mutable_real(j * n + i);
                auto ra = curl_j.real(j2);
                auto rb = other.real(j1);
                for (std::size_t p = 0; p < mj.size(); ++p) mj[p] += ra[p] - rb[p];
            }
        }
    }
    Field det = det_field(M);
    {
        auto rd = det.real(0);
        for (double v : rd)
            if (!(v > 0.0))
                throw NumericsError("initial_data: compatible construction left det <= 0");
    }
    PrimitiveState st;
    st.rho = pointwise(det, [&](double d) { return std::pow(d, 1.0 / double(n - 1)); });
    Field inv_rho = pointwise(st.rho, [](double r) { return 1.0 / r; });
    st.F = scale_by_scalar(inv_rho, M);
    st.u = c * Field(seeds.u_hat);
    return st;
}

PrimitiveState build_primitive(const GridPtr& g, const SeedFields& seeds, double c,
                               const SimConfig& cfg) {
    if (cfg.init.enforce_compat) return build_compat_primitive(g, seeds, c);
    PrimitiveState st;
    st.rho = pointwise(c * Field(seeds.a_hat), [](double v) { return 1.0 + v; });
    st.F = identity_matrix(g) + c * Field(seeds.G_hat);
    st.u = c * Field(seeds.u_hat);
    return st;
}

double initial_norm(const PrimitiveState& prim, const SimConfig& cfg,
                    const DyadicPartition& part) {
    const double n = double(cfg.n);
    Field a = pointwise(prim.rho, [](double r) { return r - 1.0; });
    PressureMaps maps = pressure_maps(a, cfg.fluid);
    Field tau = tau_from_F(prim.F, cfg.fluid.delta_det);
    const Field* ptau[2] = {&maps.p, &tau};
    ShellProfile prof = shell_profile(std::span<const Field* const>(ptau, 2), part);
    BesovSpec hyb = BesovSpec::hybrid(n / 2.0 - 1.0, n / 2.0, cfg.resolved_R0());
    const double nptau = hybrid_from_profile(prof, hyb);
    const double nu = besov_from_profile(shell_profile(prim.u, part), n / 2.0 - 1.0, 1);
    return nptau + nu;
}

}  // namespace

SimState Stepper::make_initial() const {
    SimState state;
    state.mode = cfg_.mode;

    std::mt19937_64 rng(cfg_.init.seed);
    SeedFields seeds{seed_field(grid_, Rank::scalar, cfg_.init.kmin, cfg_.init.kmax, rng),
                     seed_field(grid_, Rank::matrix, cfg_.init.kmin, cfg_.init.kmax, rng),
                     seed_field(grid_, Rank::vector, cfg_.init.kmin, cfg_.init.kmax, rng)};

    double c = 0.0;
    if (cfg_.init.eta > 0.0) {
        // one-dimensional rescale: solve norm(c) = eta by secant
        const double probe = 1e-6;
        double c0 = probe;
        double f0 = initial_norm(build_primitive(grid_, seeds, c0, cfg_), cfg_, part_) -
                    cfg_.init.eta;
        double c1 = cfg_.init.eta * probe / (f0 + cfg_.init.eta);  // linear estimate
        double f1 = initial_norm(build_primitive(grid_, seeds, c1, cfg_), cfg_, part_) -
                    cfg_.init.eta;
        for (int it = 0; it < 60 && std::abs(f1) > 1e-10 * std::max(cfg_.init.eta, 1e-30); ++it) {
            const double c2 = c1 - f1 * (c1 - c0) / (f1 - f0);
            c0 = c1;
            f0 = f1;
            c1 = c2;
            f1 = initial_norm(build_primitive(grid_, seeds, c1, cfg_), cfg_, part_) -
                 cfg_.init.eta;
        }
        if (std::abs(f1) > 1e-9 * std::max(cfg_.init.eta, 1e-30))
            throw NumericsError("initial_data: norm calibration did not converge");
        c = c1;
    }

    PrimitiveState prim = build_primitive(grid_, seeds, c, cfg_);
    switch (cfg_.mode) {
        case SimMode::primitive:
            state.prim = std::move(prim);
            break;
        case SimMode::perturbation:
            state.pert = perturbation_from_primitive(prim, cfg_.fluid);
            break;
        case SimMode::linear: {
            PerturbationState pert = perturbation_from_primitive(prim, cfg_.fluid);
            FluxPair fp = effective_fluxes(pert, cfg_.fluid);
            state.theta = std::move(fp.theta);
            state.u_lin = pert.u;
            break;
        }
    }
    return state;
}

SimState initial_data(const SimConfig& cfg) { return Stepper(cfg).make_initial(); }

// ---- recording and simulation drivers --------------------------------------

Snapshot Stepper::record(const SimState& state, double t) const {
    Snapshot snap;
    snap.t = t;

    auto profile_one = [&](const Field& f) { return shell_profile(f, part_); };

    if (state.mode == SimMode::linear) {
        snap.theta = profile_one(state.theta);
        snap.lth = profile_one(lambda_power(state.theta, -1.0));
        snap.u = profile_one(state.u_lin);
        snap.l2_theta = l2_norm(state.theta);
        snap.l2_u = l2_norm(state.u_lin);
        snap.max_u = linf_norm(state.u_lin);
        snap.p.j_min = part_.j_min;
        snap.p.l2sq.assign(std::size_t(part_.shells()), 0.0);
        snap.tau = snap.p;
        snap.f_minus_i = snap.p;
        return snap;
    }

    PerturbationState view;
    if (state.mode == SimMode::perturbation) {
        view = state.pert;
    } else {
        view.a = pointwise(state.prim.rho, [](double r) { return r - 1.0; });
        view.p = pointwise(view.a, [&](double v) { return cfg_.fluid.pressure(v); });
        view.tau = tau_from_F(state.prim.F, cfg_.fluid.delta_det);
        view.u = state.prim.u;
    }
    FluxPair fp = effective_fluxes(view, cfg_.fluid);

    snap.p = profile_one(view.p);
    snap.tau = profile_one(view.tau);
    snap.u = profile_one(view.u);
    snap.theta = profile_one(fp.theta);
    snap.lth = profile_one(lambda_power(fp.theta, -1.0));
    snap.l2_p = l2_norm(view.p);
    snap.l2_tau = l2_norm(view.tau);
    snap.l2_u = l2_norm(view.u);
    snap.l2_theta = l2_norm(fp.theta);
    snap.l2_g = l2_norm(fp.gflux);
    snap.max_u = linf_norm(view.u);

    if (state.mode == SimMode::primitive) {
        Field fmi = state.prim.F - identity_matrix(grid_);
        snap.f_minus_i = profile_one(fmi);
        snap.mean_rho = state.prim.rho.mean();
        Field det = det_field(state.prim.F);
        auto rd = det.real(0);
        snap.min_detF = *std::min_element(rd.begin(), rd.end());
        Field compat = multiply(state.prim.rho, det);
        auto rc = compat.mutable_real(0);
        for (auto& v : rc) v -= 1.0;
        snap.l2_compat = l2_norm(compat);
    } else {
        snap.mean_rho = 1.0 + view.a.mean();
        snap.f_minus_i.j_min = part_.j_min;
        snap.f_minus_i.l2sq.assign(std::size_t(part_.shells()), 0.0);
    }
    return snap;
}

Trajectory simulate(const SimConfig& cfg) {
    Stepper stepper(cfg);
    Trajectory traj;
    traj.config = cfg;
    traj.R0 = cfg.resolved_R0();
    traj.j_min = stepper.partition().j_min;
    traj.j_max = stepper.partition().j_max;

    SimState state = stepper.make_initial();
    double t = 0.0;
    traj.snaps.push_back(stepper.record(state, t));

    try {
        double next_out = cfg.output_dt;
        while (t < cfg.t_end - 1e-12) {
            double h = std::min(cfg.dt, stepper.cfl_cap(state));
            h = std::min(h, cfg.t_end - t);
            // land exactly on output boundaries for clean series
            if (t + h > next_out - 1e-12 && next_out <= cfg.t_end) h = next_out - t;
            stepper.advance(state, h);
            t += h;
            if (t >= next_out - 1e-12) {
                traj.snaps.push_back(stepper.record(state, t));
                next_out += cfg.output_dt;
            }
        }
        if (traj.snaps.back().t < cfg.t_end - 1e-12)
            traj.snaps.push_back(stepper.record(state, t));
    } catch (const NumericsError& err) {
        traj.completed = false;
        traj.error = err.what();
    }
    traj.final_state = std::move(state);
    return traj;
}

double CrossCheckReport::final_residual() const {
    if (t.empty()) return 0.0;
    return std::max({res_p.back(), res_tau.back(), res_u.back()});
}

CrossCheckReport cross_check(const SimConfig& cfg) {
    SimConfig cprim = cfg;
    cprim.mode = SimMode::primitive;
    SimConfig cpert = cfg;
    cpert.mode = SimMode::perturbation;

    Stepper sprim(cprim), spert(cpert);
    SimState yprim = sprim.make_initial();
    SimState ypert = spert.make_initial();

    CrossCheckReport rep;
    double t = 0.0;
    double next_out = cfg.output_dt;
    const double h = cfg.dt;  // fixed step so both runs share the time grid
    while (t < cfg.t_end - 1e-12) {
        double hh = std::min(h, cfg.t_end - t);
        if (t + hh > next_out - 1e-12 && next_out <= cfg.t_end) hh = next_out - t;
        sprim.advance(yprim, hh);
        spert.advance(ypert, hh);
        t += hh;
        if (t >= next_out - 1e-12 || t >= cfg.t_end - 1e-12) {
            Field tau_prim = tau_from_F(yprim.prim.F, cfg.fluid.delta_det);
            Field p_prim = pointwise(yprim.prim.rho,
                                     [&](double r) { return cfg.fluid.pressure(r - 1.0); });
            const double sp = std::max(l2_norm(ypert.pert.p), 1e-300);
            const double stau = std::max(l2_norm(ypert.pert.tau), 1e-300);
            const double su = std::max(l2_norm(ypert.pert.u), 1e-300);
            rep.t.push_back(t);
            rep.res_p.push_back(l2_distance(p_prim, ypert.pert.p) / sp);
            rep.res_tau.push_back(l2_distance(tau_prim, ypert.pert.tau) / stau);
            rep.res_u.push_back(l2_distance(yprim.prim.u, ypert.pert.u) / su);
            next_out += cfg.output_dt;
        }
    }
    return rep;
}

// ---- snapshot files ---------------------------------------------------------

namespace {

void put_u32(std::ostream& os, std::uint32_t v) { os.write(reinterpret_cast<const char*>(&v), 4); }
void put_f64(std::ostream& os, double v) { os.write(reinterpret_cast<const char*>(&v), 8); }

std::uint32_t get_u32(std::istream& is) {
    std::uint32_t v = 0;
    is.read(reinterpret_cast<char*>(&v), 4);
    return v;
}
double get_f64(std::istream& is) {
    double v = 0;
    is.read(reinterpret_cast<char*>(&v), 8);
    return v;
}

void put_field(std::ostream& os, const std::string& name, const Field& f) {
    const std::uint32_t len = std::uint32_t(name.size());
    put_u32(os, len);
    os.write(name.data(), len);
    put_u32(os, std::uint32_t(f.rank()));
    for (int c = 0; c < f.ncomp(); ++c) {
        auto r = f.real(c);
        os.write(reinterpret_cast<const char*>(r.data()),
                 std::streamsize(r.size() * sizeof(double)));
    }
}

Field get_field(std::istream& is, const GridPtr& g, std::string& name) {
    const std::uint32_t len = get_u32(is);
    name.resize(len);
    is.read(name.data(), len);
    const auto rank = static_cast<Rank>(get_u32(is));
    Field f(g, rank);
    for (int c = 0; c < f.ncomp(); ++c) {
        auto r = f.mutable_real(c);
        is.read(reinterpret_cast<char*>(r.data()), std::streamsize(r.size() * sizeof(double)));
    }
    return f;
}

constexpr std::uint32_t kSnapshotVersion = 1;

}  // namespace

void write_state(const std::string& path, const SimState& state, double t, double L) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ConfigError("write_state: cannot open " + path);
    os.write("VFSN", 4);
    put_u32(os, kSnapshotVersion);
    const Field* probe = nullptr;
    switch (state.mode) {
        case SimMode::primitive: probe = &state.prim.rho; break;
        case SimMode::perturbation: probe = &state.pert.p; break;
        case SimMode::linear: probe = &state.theta; break;
    }
    put_u32(os, std::uint32_t(state.mode));
    put_u32(os, std::uint32_t(probe->grid().dim()));
    put_u32(os, std::uint32_t(probe->grid().points()));
    put_f64(os, L);
    put_f64(os, t);
    switch (state.mode) {
        case SimMode::primitive:
            put_u32(os, 3);
            put_field(os, "rho", state.prim.rho);
            put_field(os, "u", state.prim.u);
            put_field(os, "F", state.prim.F);
            break;
        case SimMode::perturbation:
            put_u32(os, 4);
            put_field(os, "a", state.pert.a);
            put_field(os, "p", state.pert.p);
            put_field(os, "tau", state.pert.tau);
            put_field(os, "u", state.pert.u);
            break;
        case SimMode::linear:
            put_u32(os, 2);
            put_field(os, "theta", state.theta);
            put_field(os, "u", state.u_lin);
            break;
    }
}

LoadedState read_state(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ConfigError("read_state: cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    if (std::memcmp(magic, "VFSN", 4) != 0) throw ConfigError("read_state: bad magic");
    if (get_u32(is) != kSnapshotVersion) throw ConfigError("read_state: unsupported version");
    LoadedState out;
    out.state.mode = static_cast<SimMode>(get_u32(is));
    const int n = int(get_u32(is));
    const int N = int(get_u32(is));
    out.L = get_f64(is);
    out.t = get_f64(is);
    GridPtr g = Grid::make(n, N, out.L);
    const std::uint32_t nfields = get_u32(is);
    for (std::uint32_t i = 0; i < nfields; ++i) {
        std::string name;
        Field f = get_field(is, g, name);
        switch (out.state.mode) {
            case SimMode::primitive:
                if (name == "rho") out.state.prim.rho = std::move(f);
                else if (name == "u") out.state.prim.u = std::move(f);
                else if (name == "F") out.state.prim.F = std::move(f);
                break;
            case SimMode::perturbation:
                if (name == "a") out.state.pert.a = std::move(f);
                else if (name == "p") out.state.pert.p = std::move(f);
                else if (name == "tau") out.state.pert.tau = std::move(f);
                else if (name == "u") out.state.pert.u = std::move(f);
                break;
            case SimMode::linear:
                if (name == "theta") out.state.theta = std::move(f);
                else if (name == "u") out.state.u_lin = std::move(f);
                break;
        }
    }
    if (!is) throw ConfigError("read_state: truncated file");
    return out;
}

}  // namespace vflux
