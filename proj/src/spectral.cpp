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

#include "viscoflux/spectral.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <stdexcept>

namespace vflux {

const char* regime_name(Regime r) {
    switch (r) {
        case Regime::oscillatory: return "oscillatory";
        case Regime::critical: return "critical";
        case Regime::overdamped: return "overdamped";
    }
    return "?";
}

namespace {

Regime classify(double a_coef, double visc, double k) {
    const double lhs = visc * k;
    const double rhs = 2.0 * std::sqrt(a_coef);
    if (std::abs(lhs - rhs) <= 1e-14 * (lhs + rhs)) return Regime::critical;
    return lhs < rhs ? Regime::oscillatory : Regime::overdamped;
}

// sinh(z)/z with series fallback near zero
cplx sinhc_c(cplx z) {
    if (std::abs(z) < 1e-5) {
        const cplx z2 = z * z;
        return 1.0 + z2 / 6.0 * (1.0 + z2 / 20.0);
    }
    return std::sinh(z) / z;
}

}  // namespace

std::array<cplx, 2> green_block_eigs(double a_coef, double visc, double k) {
    const double mu = -0.5 * visc * k * k;
    const cplx disc = cplx(mu * mu - a_coef * k * k, 0.0);
    const cplx d = std::sqrt(disc);
    // lambda_+ is the fast branch (more negative real part in the
    // overdamped regime), lambda_- the slow one
    return {mu - d, mu + d};
}

ModeAnalysis green_eigs(double xi_norm, const FluidParams& params) {
    params.validate();
    if (!(xi_norm > 0.0)) throw std::invalid_argument("green_eigs: xi_norm must be positive");

    ModeAnalysis out;
    out.xi_norm = xi_norm;
    out.eigs_P = green_block_eigs(params.alpha, params.mu0, xi_norm);
    out.eigs_Pperp = green_block_eigs(1.0 + params.alpha, params.nu_perp(), xi_norm);
    out.regime_P = classify(params.alpha, params.mu0, xi_norm);
    out.regime_Pperp = classify(1.0 + params.alpha, params.nu_perp(), xi_norm);
    out.damping_limits = theta_damping_rates(params);

    // cross-check the closed forms against a QR eigendecomposition; the
    // check is skipped close to the defective boundary where QR loses
    // half the digits by construction
    auto check = [&](double a_coef, double visc, const std::array<cplx, 2>& eigs) {
        const double k = xi_norm;
        const double scale = std::max({std::abs(eigs[0]), std::abs(eigs[1]), 1.0});
        if (std::abs(eigs[0] - eigs[1]) < 1e-6 * scale) return;
        Eigen::Matrix2d G;
        G << 0.0, a_coef * k, -k, -visc * k * k;
        Eigen::EigenSolver<Eigen::Matrix2d> es(G, false);
        cplx q0(es.eigenvalues()[0].real(), es.eigenvalues()[0].imag());
        cplx q1(es.eigenvalues()[1].real(), es.eigenvalues()[1].imag());
        const double err = std::min(std::abs(q0 - eigs[0]) + std::abs(q1 - eigs[1]),
                                    std::abs(q0 - eigs[1]) + std::abs(q1 - eigs[0]));
        if (err > 1e-11 * scale)
            throw NumericsError("green_eigs: closed form disagrees with eigendecomposition");
    };
    check(params.alpha, params.mu0, out.eigs_P);
    check(1.0 + params.alpha, params.nu_perp(), out.eigs_Pperp);
    return out;
}

std::pair<double, double> theta_damping_rates(const FluidParams& params) {
    params.validate();
    return {params.alpha / params.mu0, (1.0 + params.alpha) / params.nu_perp()};
}

double regime_boundary(double a_coef, double visc) {
    // discriminant sign of the 2x2 block: visc*k - 2*sqrt(a)
    auto disc = [&](double k) { return visc * k - 2.0 * std::sqrt(a_coef); };
    double lo = 1e-8, hi = 1e8;
    if (disc(lo) > 0.0 || disc(hi) < 0.0)
        throw std::invalid_argument("regime_boundary: no sign change in bracket");
    for (int it = 0; it < 200 && hi - lo > 1e-13 * std::max(1.0, lo); ++it) {
        const double mid = 0.5 * (lo + hi);
        (disc(mid) < 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

std::array<double, 4> green_expm(double a_coef, double visc, double k, double t) {
    // G = [[0, a k], [-k, -m k^2]] = mu I + N with tr N = 0.  Work with
    // exp(lambda t) of the two stable branches directly so strongly
    // overdamped modes cannot overflow through cosh.
    const double mu = -0.5 * visc * k * k;
    const cplx d = std::sqrt(cplx(mu * mu - a_coef * k * k, 0.0));
    const cplx lam_slow = cplx(mu, 0.0) + d;
    const cplx lam_fast = cplx(mu, 0.0) - d;
    const cplx es = std::exp(lam_slow * t);
    const cplx ef = std::exp(lam_fast * t);
    const cplx c0 = 0.5 * (es + ef);  // e^{mu t} cosh(d t)
    cplx c1;                           // e^{mu t} sinh(d t)/d
    if (std::abs(d) * t < 1e-5) {
        c1 = std::exp(cplx(mu * t, 0.0)) * sinhc_c(d * t) * t;
    } else {
        c1 = (es - ef) / (2.0 * d);
    }
    const double n00 = -mu, n01 = a_coef * k, n10 = -k, n11 = mu;
    auto entry = [&](double nij, double delta) { return (c0 * delta + c1 * nij).real(); };
    return {entry(n00, 1.0), entry(n01, 0.0), entry(n10, 0.0), entry(n11, 1.0)};
}

Field project(const Field& f, Proj which) {
    if (f.rank() != Rank::vector) throw std::invalid_argument("project: vector field expected");
    if (f.mean_fraction() > 1e-10)
        throw std::invalid_argument("project: field must be mean-zero");
    const Grid& g = f.grid();
    const int n = g.dim();
    Field out(f.gridp(), Rank::vector);
    std::vector<std::span<const cplx>> in;
    for (int d = 0; d < n; ++d) in.push_back(f.spec(d));
    std::vector<std::span<cplx>> o;
    for (int d = 0; d < n; ++d) o.push_back(out.mutable_spec(d));
    for (std::size_t s = 0; s < g.nspec(); ++s) {
        auto m = g.freq(s);
        double q = 0.0;
        for (int d = 0; d < n; ++d) q += double(m[d]) * double(m[d]);
        if (q == 0.0) continue;  // zero mode dropped
        cplx dotp(0.0, 0.0);
        for (int d = 0; d < n; ++d) dotp += double(m[d]) * in[std::size_t(d)][s];
        dotp /= q;
        for (int d = 0; d < n; ++d) {
            const cplx perp = double(m[d]) * dotp;
            o[std::size_t(d)][s] = (which == Proj::Pperp) ? perp : in[std::size_t(d)][s] - perp;
        }
    }
    return out;
}

Field lambda_power(const Field& f, double s) {
    if (s == 0.0) return f;
    if (s < 0.0 && f.mean_fraction() > 1e-10)
        throw std::invalid_argument("lambda_power: negative power requires a mean-zero field");
    const Grid& g = f.grid();
    const double ks = g.k_scale();
    Field out(f.gridp(), f.rank());
    for (int c = 0; c < f.ncomp(); ++c) {
        auto in = f.spec(c);
        auto o = out.mutable_spec(c);
        for (std::size_t sp = 0; sp < in.size(); ++sp) {
            auto m = g.freq(sp);
            double q = 0.0;
            for (int d = 0; d < g.dim(); ++d) q += double(m[d]) * double(m[d]);
            o[sp] = (q == 0.0) ? cplx(0.0, 0.0) : std::pow(ks * std::sqrt(q), s) * in[sp];
        }
    }
    return out;
}

std::pair<Field, Field> effective_velocities(const Field& u, const Field& theta,
                                             const FluidParams& params) {
    params.validate();
    Field pu = project(u, Proj::P);
    Field pperpu = project(u, Proj::Pperp);
    Field ptheta = project(theta, Proj::P);
    Field pperptheta = project(theta, Proj::Pperp);
    Field inv_lap_p = lambda_power(ptheta, -2.0);
    Field inv_lap_pp = lambda_power(pperptheta, -2.0);
    Field w = pu + (1.0 / params.mu0) * inv_lap_p;
    Field wperp = pperpu + (1.0 / params.nu_perp()) * inv_lap_pp;
    return {std::move(w), std::move(wperp)};
}

LinearPropagator::LinearPropagator(GridPtr grid, FluidParams params)
    : grid_(std::move(grid)), params_(params) {
    params_.validate();
}

const LinearPropagator::Tables& LinearPropagator::tables_for(double t) const {
    std::lock_guard<std::mutex> lock(cache_mutex_);
    auto it = cache_.find(t);
    if (it != cache_.end()) return it->second;
    Tables tab;
    tab.ep.resize(grid_->nspec());
    tab.eperp.resize(grid_->nspec());
    for (std::size_t s = 0; s < grid_->nspec(); ++s) {
        const double k = grid_->xi_norm(s);
        if (k == 0.0) {
            tab.ep[s] = {1.0, 0.0, 0.0, 1.0};
            tab.eperp[s] = {1.0, 0.0, 0.0, 1.0};
        } else {
            tab.ep[s] = green_expm(params_.alpha, params_.mu0, k, t);
            tab.eperp[s] = green_expm(1.0 + params_.alpha, params_.nu_perp(), k, t);
        }
    }
    return cache_.emplace(t, std::move(tab)).first->second;
}

std::pair<Field, Field> LinearPropagator::apply(const Field& theta, const Field& u, double t) const {
    if (t < 0.0) throw std::invalid_argument("LinearPropagator: t must be nonnegative");
    const Grid& g = *grid_;
    const int n = g.dim();
    const Tables& tab = tables_for(t);

    Field theta_t(theta.gridp(), Rank::vector);
    Field u_t(u.gridp(), Rank::vector);
    std::vector<std::span<const cplx>> th, uu;
    std::vector<std::span<cplx>> oth, ou;
    for (int d = 0; d < n; ++d) {
        th.push_back(theta.spec(d));
        uu.push_back(u.spec(d));
    }
    for (int d = 0; d < n; ++d) {
        oth.push_back(theta_t.mutable_spec(d));
        ou.push_back(u_t.mutable_spec(d));
    }

    for (std::size_t s = 0; s < g.nspec(); ++s) {
        auto m = g.freq(s);
        double q = 0.0;
        for (int d = 0; d < n; ++d) q += double(m[d]) * double(m[d]);
        if (q == 0.0) {
            for (int d = 0; d < n; ++d) {
                oth[std::size_t(d)][s] = th[std::size_t(d)][s];
                ou[std::size_t(d)][s] = uu[std::size_t(d)][s];
            }
            continue;
        }
        const double k = g.k_scale() * std::sqrt(q);
        double e[3];
        const double qn = std::sqrt(q);
        for (int d = 0; d < n; ++d) e[d] = double(m[d]) / qn;

        cplx th_par(0.0, 0.0), u_par(0.0, 0.0);
        for (int d = 0; d < n; ++d) {
            th_par += e[d] * th[std::size_t(d)][s];
            u_par += e[d] * uu[std::size_t(d)][s];
        }

        // Pperp block: (Lambda^-1 Pperp theta, Pperp u) along e
        const auto& Ep = tab.eperp[s];
        const cplx phi_perp = th_par / k;
        const cplx phi_perp_t = Ep[0] * phi_perp + Ep[1] * u_par;
        const cplx u_par_t = Ep[2] * phi_perp + Ep[3] * u_par;

        // P block acts componentwise on the transverse parts
        const auto& E = tab.ep[s];
        for (int d = 0; d < n; ++d) {
            const cplx th_perp_comp = th[std::size_t(d)][s] - e[d] * th_par;
            const cplx u_perp_comp = uu[std::size_t(d)][s] - e[d] * u_par;
            const cplx phi = th_perp_comp / k;
            const cplx phi_t = E[0] * phi + E[1] * u_perp_comp;
            const cplx uc_t = E[2] * phi + E[3] * u_perp_comp;
            oth[std::size_t(d)][s] = k * (phi_t + e[d] * phi_perp_t);
            ou[std::size_t(d)][s] = uc_t + e[d] * u_par_t;
        }
    }
    return {std::move(theta_t), std::move(u_t)};
}

}  // namespace vflux
