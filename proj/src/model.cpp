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

#include "viscoflux/model.hpp"

#include <cmath>
#include <sstream>

#include "viscoflux/errors.hpp"

namespace vflux {

void FluidParams::validate() const {
    if (!(mu0 > 0.0)) throw ConfigError("FluidParams: mu0 must be positive");
    if (!(lambda0 + 2.0 * mu0 > 0.0)) throw ConfigError("FluidParams: lambda0 + 2*mu0 must be positive");
    if (!(alpha > 0.0)) throw ConfigError("FluidParams: alpha must be positive");
    if (!(gamma > 0.0)) throw ConfigError("FluidParams: gamma must be positive");
    if (!(delta_det > 0.0)) throw ConfigError("FluidParams: delta_det must be positive");
}

double FluidParams::pressure(double a) const { return (std::pow(1.0 + a, gamma) - 1.0) / gamma; }

double FluidParams::K_of(double a) const { return std::pow(1.0 + a, gamma) - 1.0; }

double FluidParams::a_of_p(double p) const {
    const double base = 1.0 + gamma * p;
    if (!(base > 0.0)) throw NumericsError("a_of_p: pressure outside the vacuum-free range");
    return std::pow(base, 1.0 / gamma) - 1.0;
}

double FluidParams::default_R0() const {
    const double r1 = 2.0 * std::sqrt(alpha) / mu0;
    const double r2 = 2.0 * std::sqrt(1.0 + alpha) / nu_perp();
    return std::exp2(std::ceil(std::log2(std::max(r1, r2))));
}

Field det_field(const Field& F) {
    const Grid& g = F.grid();
    const int n = g.dim();
    Field out(F.gridp(), Rank::scalar);
    auto o = out.mutable_real(0);
    if (n == 2) {
        auto a = F.real(0), b = F.real(1), c = F.real(2), d = F.real(3);
        for (std::size_t i = 0; i < o.size(); ++i) o[i] = a[i] * d[i] - b[i] * c[i];
    } else {
        auto m00 = F.real(0), m01 = F.real(1), m02 = F.real(2);
        auto m10 = F.real(3), m11 = F.real(4), m12 = F.real(5);
        auto m20 = F.real(6), m21 = F.real(7), m22 = F.real(8);
        for (std::size_t i = 0; i < o.size(); ++i)
            o[i] = m00[i] * (m11[i] * m22[i] - m12[i] * m21[i]) -
                   m01[i] * (m10[i] * m22[i] - m12[i] * m20[i]) +
                   m02[i] * (m10[i] * m21[i] - m11[i] * m20[i]);
    }
    return out;
}

Field tau_from_F(const Field& F, double delta_det) {
    const Grid& g = F.grid();
    const int n = g.dim();
    Field det = det_field(F);
    auto rdet = det.real(0);
    double worst = rdet.empty() ? 0.0 : rdet[0];
    std::size_t worst_idx = 0;
    for (std::size_t i = 0; i < rdet.size(); ++i)
        if (rdet[i] < worst) {
            worst = rdet[i];
            worst_idx = i;
        }
    if (worst <= delta_det) {
        auto x = g.coords(worst_idx);
        std::ostringstream msg;
        msg << "tau_from_F: det F = " << worst << " <= " << delta_det << " at grid point (";
        for (int d = 0; d < n; ++d) msg << (d ? "," : "") << x[d];
        msg << ")";
        throw NumericsError(msg.str());
    }

    Field out(F.gridp(), Rank::matrix);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            auto o = out.mutable_real(i * n + j);
            for (int k = 0; k < n; ++k) {
                auto a = F.real(i * n + k);
                auto b = F.real(j * n + k);
                for (std::size_t p = 0; p < o.size(); ++p) o[p] += a[p] * b[p];
            }
            for (std::size_t p = 0; p < o.size(); ++p) {
                o[p] = o[p] / rdet[p] - (i == j ? 1.0 : 0.0);
            }
            if (j != i) {
                auto lo = out.mutable_real(j * n + i);
                std::copy(o.begin(), o.end(), lo.begin());
            }
        }
    return out;
}

PressureMaps pressure_maps(const Field& a, const FluidParams& params) {
    params.validate();
    auto ra = a.real(0);
    for (double v : ra)
        if (!(v > -1.0)) throw NumericsError("pressure_maps: vacuum (a <= -1)");
    PressureMaps maps;
    maps.p = pointwise(a, [&](double v) { return params.pressure(v); });
    maps.K = pointwise(a, [&](double v) { return params.K_of(v); });
    maps.I = pointwise(a, [&](double v) { return params.I_of(v); });
    return maps;
}

FluxPair effective_fluxes(const PerturbationState& state, const FluidParams& params) {
    FluxPair out;
    out.theta = gradient(state.p) - params.alpha * divergence_mat(state.tau);
    out.gflux = add_scalar_times_identity(state.tau, state.p, -1.0);
    return out;
}

Field a_operator(const Field& u, const FluidParams& params) {
    return params.mu0 * laplacian(u) + (params.lambda0 + params.mu0) * gradient(divergence(u));
}

namespace {

// F3 = grad(u) tau + tau grad(u)^T - div(u) tau, assembled pointwise
Field f3_term(const Field& gradu, const Field& divu, const Field& tau) {
    const int n = tau.grid().dim();
    Field out(tau.gridp(), Rank::matrix);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            auto o = out.mutable_real(i * n + j);
            for (int k = 0; k < n; ++k) {
                auto gik = gradu.real(i * n + k);
                auto tkj = tau.real(k * n + j);
                auto tik = tau.real(i * n + k);
                auto gjk = gradu.real(j * n + k);
                for (std::size_t p = 0; p < o.size(); ++p)
                    o[p] += gik[p] * tkj[p] + tik[p] * gjk[p];
            }
            auto dv = divu.real(0);
            auto tij = tau.real(i * n + j);
            for (std::size_t p = 0; p < o.size(); ++p) o[p] -= dv[p] * tij[p];
        }
    return out;
}

}  // namespace

PerturbationRhs rhs_perturbation(const PerturbationState& state, const FluidParams& params) {
    const auto& gp = state.p.gridp();
    PerturbationRhs rhs;

    Field a = pointwise(state.p, [&](double v) { return params.a_of_p(v); });
    PressureMaps maps = pressure_maps(a, params);

    Field divu = divergence(state.u);
    Field gradu = gradient_vec(state.u);

    // F1 = -K(a) div u
    rhs.F1 = -1.0 * multiply(maps.K, divu);
    dealias_inplace(rhs.F1);

    // F2 = -I(a) A u - u.grad u + I(a) (grad p - alpha div tau) [+ variable-viscosity terms]
    Field Au = a_operator(state.u, params);
    Field theta = gradient(state.p) - params.alpha * divergence_mat(state.tau);
    rhs.F2 = -1.0 * scale_by_scalar(maps.I, Au) - advect(state.u, state.u) +
             scale_by_scalar(maps.I, theta);
    if (!params.constant_viscosity()) {
        // (1/(1+a)) div(2 mu~(a) D(u) + lambda~(a) div u Id)
        Field mu_t = pointwise(a, [&](double v) { return params.mu_tilde(v); });
        Field la_t = pointwise(a, [&](double v) { return params.lambda_tilde(v); });
        Field D = sym(gradu);
        Field visc = scale_by_scalar(mu_t, D);
        visc *= 2.0;
        Field la_div = multiply(la_t, divu);
        visc = add_scalar_times_identity(visc, la_div, 1.0);
        Field divv = divergence_mat(visc);
        Field inv1a = pointwise(a, [](double v) { return 1.0 / (1.0 + v); });
        rhs.F2 += scale_by_scalar(inv1a, divv);
    }
    dealias_inplace(rhs.F2);

    // F3 = grad(u) tau + tau grad(u)^T - div(u) tau
    rhs.F3 = f3_term(gradu, divu, state.tau);
    dealias_inplace(rhs.F3);
    return rhs;
}

FluxRhs rhs_flux(const PerturbationState& state, const FluidParams& params) {
    const Grid& g = state.p.grid();
    const int n = g.dim();
    FluxRhs rhs;

    Field a = pointwise(state.p, [&](double v) { return params.a_of_p(v); });
    PressureMaps maps = pressure_maps(a, params);
    Field divu = divergence(state.u);
    Field gradu = gradient_vec(state.u);
    Field gradp = gradient(state.p);

    // F1~ = -grad(K(a) div u) - (grad u)^T grad p
    Field Kdiv = multiply(maps.K, divu);
    dealias_inplace(Kdiv);
    Field gut_gp = matvec(transpose(gradu), gradp);
    rhs.F1_tilde = -1.0 * gradient(Kdiv) - gut_gp;
    dealias_inplace(rhs.F1_tilde);

    // F3~ = -((grad u)^T . grad) . tau + div F3,
    // [((grad u)^T . grad) . tau]_i = sum_{j,k} d_j u_k d_k tau_{ij}
    Field penetration(state.p.gridp(), Rank::vector);
    {
        std::vector<Field> dtau;
        dtau.reserve(std::size_t(n));
        for (int k = 0; k < n; ++k) dtau.push_back(derivative(state.tau, k));
        for (int i = 0; i < n; ++i) {
            auto o = penetration.mutable_real(i);
            for (int j = 0; j < n; ++j)
                for (int k = 0; k < n; ++k) {
                    auto gu = gradu.real(k * n + j);  // d_j u_k
                    auto dt = dtau[std::size_t(k)].real(i * n + j);
                    for (std::size_t p = 0; p < o.size(); ++p) o[p] += gu[p] * dt[p];
                }
        }
    }
    Field F3 = f3_term(gradu, divu, state.tau);
    dealias_inplace(F3);
    rhs.F3_tilde = divergence_mat(F3) - penetration;
    dealias_inplace(rhs.F3_tilde);

    // F3 - F1 Id for the G equation
    Field F1 = -1.0 * multiply(maps.K, divu);
    dealias_inplace(F1);
    rhs.F3_minus_F1_id = add_scalar_times_identity(F3, F1, -1.0);
    return rhs;
}

PerturbationState perturbation_from_primitive(const PrimitiveState& prim, const FluidParams& params) {
    params.validate();
    PerturbationState out;
    out.a = pointwise(prim.rho, [](double v) { return v - 1.0; });
    const double mean_a = out.a.mean();
    if (std::abs(mean_a) > 1e-10)
        throw std::invalid_argument(
            "perturbation_from_primitive: mean of rho - 1 must vanish (torus convention), got " +
            std::to_string(mean_a));
    for (int d = 0; d < prim.u.grid().dim(); ++d)
        if (std::abs(prim.u.mean(d)) > 1e-10)
            throw std::invalid_argument("perturbation_from_primitive: mean of u must vanish");
    PressureMaps maps = pressure_maps(out.a, params);
    out.p = maps.p;
    out.tau = tau_from_F(prim.F, params.delta_det);
    out.u = prim.u;
    return out;
}

void check_primitive(const PrimitiveState& s, const FluidParams& params) {
    auto r = s.rho.real(0);
    for (double v : r)
        if (!(v > 0.0)) throw NumericsError("primitive state: rho <= 0");
    Field det = det_field(s.F);
    auto rd = det.real(0);
    for (double v : rd)
        if (!(v > params.delta_det)) throw NumericsError("primitive state: det F <= delta_det");
}

void check_perturbation(const PerturbationState& s, const FluidParams& params) {
    auto ra = s.a.real(0);
    for (double v : ra)
        if (!(v > -1.0)) throw NumericsError("perturbation state: vacuum (a <= -1)");
    // a and p must agree through the pressure law
    auto rp = s.p.real(0);
    double scale = linf_norm(s.p) + 1e-30;
    for (std::size_t i = 0; i < ra.size(); ++i)
        if (std::abs(params.pressure(ra[i]) - rp[i]) > 1e-12 * std::max(1.0, scale))
            throw NumericsError("perturbation state: a and p inconsistent");
    // tau symmetric
    const int n = s.tau.grid().dim();
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            auto up = s.tau.real(i * n + j);
            auto lo = s.tau.real(j * n + i);
            for (std::size_t p = 0; p < up.size(); ++p)
                if (std::abs(up[p] - lo[p]) > 1e-12)
                    throw NumericsError("perturbation state: tau asymmetry exceeds 1e-12");
        }
}

}  // namespace vflux
