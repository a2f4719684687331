#include "viscoflux/spectral.hpp"

#include <array>
#include <cmath>
#include <complex>

#include "doctest.h"
#include "test_util.hpp"

using namespace vflux;
using vftest::random_band_field;
using vftest::rel_err;
using vftest::with_linf;

namespace {
GridPtr grid64() {
    static GridPtr g = Grid::make(2, 64);
    return g;
}

double l2_inner(const Field& a, const Field& b) {
    const auto& g = a.grid();
    double acc = 0.0;
    for (int c = 0; c < a.ncomp(); ++c) {
        auto ra = a.real(c);
        auto rb = b.real(c);
        for (std::size_t i = 0; i < ra.size(); ++i) acc += ra[i] * rb[i];
    }
    return acc * std::pow(g.period() / g.points(), g.dim());
}

// RK4 integration of y' = G y for the 2x2 block, the independent oracle
// for the closed-form exponential
std::array<double, 2> rk4_block(double a_coef, double visc, double k, double t,
                                std::array<double, 2> y, int steps = 20000) {
    const double h = t / steps;
    auto rhs = [&](const std::array<double, 2>& v) {
        return std::array<double, 2>{a_coef * k * v[1], -k * v[0] - visc * k * k * v[1]};
    };
    for (int i = 0; i < steps; ++i) {
        auto k1 = rhs(y);
        auto k2 = rhs({y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]});
        auto k3 = rhs({y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]});
        auto k4 = rhs({y[0] + h * k3[0], y[1] + h * k3[1]});
        y[0] += h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]);
        y[1] += h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]);
    }
    return y;
}
}  // namespace

TEST_CASE("projections: identity split, gradients, orthogonality") {
    auto g = grid64();
    Field f = with_linf(random_band_field(g, Rank::vector, 1, 20, 11), 1.0);

    Field pf = project(f, Proj::P);
    Field qf = project(f, Proj::Pperp);
    CHECK(l2_distance(pf + qf, f) < 1e-12 * l2_norm(f));

    // idempotent and mutually annihilating
    CHECK(l2_distance(project(pf, Proj::P), pf) < 1e-12 * l2_norm(f));
    CHECK(l2_norm(project(pf, Proj::Pperp)) < 1e-12 * l2_norm(f));

    // gradients are potential: P kills them
    Field q = random_band_field(g, Rank::scalar, 1, 20, 12);
    Field gq = gradient(q);
    CHECK(l2_norm(project(gq, Proj::P)) < 1e-12 * l2_norm(gq));

    // L2 orthogonality of the split
    Field h = with_linf(random_band_field(g, Rank::vector, 1, 20, 13), 1.0);
    CHECK(std::abs(l2_inner(pf, project(h, Proj::Pperp))) <
          1e-12 * l2_norm(pf) * l2_norm(h));

    // Pythagoras
    const double total = l2_norm(f), np = l2_norm(pf), nq = l2_norm(qf);
    CHECK(rel_err(total * total, np * np + nq * nq) < 1e-12);

    Field biased = f;
    {
        auto r = biased.mutable_real(0);
        for (auto& v : r) v += 1.0;
    }
    CHECK_THROWS_AS(project(biased, Proj::P), std::invalid_argument);
}

TEST_CASE("lambda_power: unit mode, Laplacian, inverse pair") {
    auto g = grid64();
    Field s1(g, Rank::scalar);
    {
        auto r = s1.mutable_real(0);
        for (std::size_t i = 0; i < r.size(); ++i) r[i] = std::sin(g->coords(i)[0]);
    }
    CHECK(l2_distance(lambda_power(s1, 1.0), s1) < 1e-12 * l2_norm(s1));

    Field f = random_band_field(g, Rank::scalar, 1, 20, 21);
    Field lap2 = lambda_power(f, 2.0);
    Field neg_lap = -1.0 * laplacian(f);
    CHECK(l2_distance(lap2, neg_lap) < 1e-12 * l2_norm(neg_lap));

    Field round = lambda_power(lambda_power(f, 1.0), -1.0);
    CHECK(l2_distance(round, f) < 1e-12 * l2_norm(f));

    Field biased = f;
    {
        auto r = biased.mutable_real(0);
        for (auto& v : r) v += 1.0;
    }
    CHECK_THROWS_AS(lambda_power(biased, -1.0), std::invalid_argument);
}

TEST_CASE("green_eigs: frozen oracles in all three regimes") {
    FluidParams par;  // mu0 = 1, lambda0 = 0, alpha = 1

    ModeAnalysis low = green_eigs(1.0, par);
    CHECK(low.regime_P == Regime::oscillatory);
    CHECK(low.eigs_P[0].real() == doctest::Approx(-0.5).epsilon(1e-14));
    CHECK(std::abs(low.eigs_P[0].imag()) ==
          doctest::Approx(0.8660254037844386).epsilon(1e-14));

    ModeAnalysis crit = green_eigs(2.0, par);
    CHECK(crit.regime_P == Regime::critical);
    CHECK(crit.eigs_P[0].real() == doctest::Approx(-2.0).epsilon(1e-14));
    CHECK(crit.eigs_P[1].real() == doctest::Approx(-2.0).epsilon(1e-14));
    CHECK(std::abs(crit.eigs_P[0].imag()) < 1e-14);

    ModeAnalysis high = green_eigs(4.0, par);
    CHECK(high.regime_P == Regime::overdamped);
    // roots of lambda^2 + 16 lambda + 16
    CHECK(high.eigs_P[0].real() == doctest::Approx(-14.928203230275509).epsilon(1e-14));
    CHECK(high.eigs_P[1].real() == doctest::Approx(-1.0717967697244912).epsilon(1e-13));

    CHECK_THROWS_AS(green_eigs(0.0, par), std::invalid_argument);
    CHECK_THROWS_AS(green_eigs(-1.0, par), std::invalid_argument);
}

TEST_CASE("green_eigs: Vieta identities and strict stability over the lattice") {
    FluidParams par;
    par.mu0 = 0.7;
    par.lambda0 = 0.2;
    par.alpha = 1.3;
    for (double k = 0.25; k < 2.0e3; k *= 1.9) {
        ModeAnalysis ma = green_eigs(k, par);
        const cplx sum = ma.eigs_P[0] + ma.eigs_P[1];
        const cplx prod = ma.eigs_P[0] * ma.eigs_P[1];
        CHECK(rel_err(sum.real(), -par.mu0 * k * k) < 1e-10);
        CHECK(std::abs(sum.imag()) < 1e-10 * std::abs(sum.real()));
        CHECK(rel_err(prod.real(), par.alpha * k * k) < 1e-10);
        // Pperp block: roots of x^2 + nu k^2 x + (1+alpha) k^2
        const cplx sump = ma.eigs_Pperp[0] + ma.eigs_Pperp[1];
        const cplx prodp = ma.eigs_Pperp[0] * ma.eigs_Pperp[1];
        CHECK(rel_err(sump.real(), -par.nu_perp() * k * k) < 1e-10);
        CHECK(rel_err(prodp.real(), (1.0 + par.alpha) * k * k) < 1e-10);
        // strict stability
        CHECK(ma.eigs_P[0].real() < 0.0);
        CHECK(ma.eigs_P[1].real() < 0.0);
        CHECK(ma.eigs_Pperp[0].real() < 0.0);
        CHECK(ma.eigs_Pperp[1].real() < 0.0);
    }
}

TEST_CASE("theta damping rates and the high-frequency slow branch") {
    FluidParams par;  // mu0 = 1, lambda0 = 0, alpha = 1
    auto [rp, rq] = theta_damping_rates(par);
    CHECK(rp == 1.0);
    CHECK(rq == 1.0);  // (1+1)/(0+2)

    ModeAnalysis far = green_eigs(1024.0, par);
    CHECK(rel_err(std::abs(far.eigs_P[1].real()), rp) < 1e-2);
    CHECK(rel_err(std::abs(far.eigs_Pperp[1].real()), rq) < 1e-2);

    FluidParams par2;
    par2.mu0 = 2.0;
    par2.lambda0 = 0.5;
    par2.alpha = 0.3;
    auto [rp2, rq2] = theta_damping_rates(par2);
    CHECK(rp2 == doctest::Approx(0.15).epsilon(1e-14));
    CHECK(rq2 == doctest::Approx(1.3 / 4.5).epsilon(1e-14));
}

TEST_CASE("regime boundary located by bisection") {
    CHECK(std::abs(regime_boundary(1.0, 1.0) - 2.0) < 1e-12);
    // mu |xi| = 2 sqrt(alpha) with alpha = 2.25, mu = 1.5 -> |xi| = 2
    CHECK(std::abs(regime_boundary(2.25, 1.5) - 2.0) < 1e-12);
}

TEST_CASE("green_expm: identity, semigroup, RK4 oracle incl. the defective point") {
    FluidParams par;
    for (double k : {0.5, 1.0, 2.0, 3.7, 8.0}) {
        auto E0 = green_expm(par.alpha, par.mu0, k, 0.0);
        CHECK(E0[0] == 1.0);
        CHECK(E0[1] == 0.0);
        CHECK(E0[2] == 0.0);
        CHECK(E0[3] == 1.0);

        auto Ea = green_expm(par.alpha, par.mu0, k, 0.3);
        auto Eb = green_expm(par.alpha, par.mu0, k, 0.45);
        auto Eab = green_expm(par.alpha, par.mu0, k, 0.75);
        // matrix product Eb * Ea
        std::array<double, 4> prod{Eb[0] * Ea[0] + Eb[1] * Ea[2], Eb[0] * Ea[1] + Eb[1] * Ea[3],
                                   Eb[2] * Ea[0] + Eb[3] * Ea[2], Eb[2] * Ea[1] + Eb[3] * Ea[3]};
        for (int i = 0; i < 4; ++i) CHECK(std::abs(prod[i] - Eab[i]) < 1e-12);

        // columns against the RK4 oracle (k = 2 is the Jordan point)
        for (int col = 0; col < 2; ++col) {
            std::array<double, 2> y0{col == 0 ? 1.0 : 0.0, col == 0 ? 0.0 : 1.0};
            auto yr = rk4_block(par.alpha, par.mu0, k, 0.5, y0);
            auto E = green_expm(par.alpha, par.mu0, k, 0.5);
            CHECK(std::abs(E[col] - yr[0]) < 1e-10);
            CHECK(std::abs(E[2 + col] - yr[1]) < 1e-10);
        }
    }
}

TEST_CASE("effective_velocities: limits and defining identities") {
    auto g = grid64();
    FluidParams par;
    par.lambda0 = 0.4;

    Field u = with_linf(random_band_field(g, Rank::vector, 1, 16, 33), 1.0);
    Field zero_theta(g, Rank::vector);
    auto [w0, wp0] = effective_velocities(u, zero_theta, par);
    CHECK(l2_distance(w0, project(u, Proj::P)) < 1e-12 * l2_norm(u));
    CHECK(l2_distance(wp0, project(u, Proj::Pperp)) < 1e-12 * l2_norm(u));

    // u = 0, theta = grad q with a single |xi| = 1 mode
    Field q(g, Rank::scalar);
    {
        auto r = q.mutable_real(0);
        for (std::size_t i = 0; i < r.size(); ++i) r[i] = std::cos(g->coords(i)[0]);
    }
    Field gq = gradient(q);
    Field zero_u(g, Rank::vector);
    auto [w1, wp1] = effective_velocities(zero_u, gq, par);
    CHECK(l2_norm(w1) < 1e-12 * l2_norm(gq));
    Field expect = (1.0 / par.nu_perp()) * gq;
    CHECK(l2_distance(wp1, expect) < 1e-12 * l2_norm(expect));

    // defining identities: -mu0 Lap w + mu0 Lap P u = P theta
    Field theta = with_linf(random_band_field(g, Rank::vector, 1, 16, 34), 1.0);
    auto [w, wp] = effective_velocities(u, theta, par);
    Field lhs = -par.mu0 * laplacian(w) + par.mu0 * laplacian(project(u, Proj::P));
    Field rhs = project(theta, Proj::P);
    CHECK(l2_distance(lhs, rhs) < 1e-12 * std::max(1.0, l2_norm(rhs)));
    Field lhsp = -par.nu_perp() * laplacian(wp) + par.nu_perp() * laplacian(project(u, Proj::Pperp));
    Field rhsp = project(theta, Proj::Pperp);
    CHECK(l2_distance(lhsp, rhsp) < 1e-12 * std::max(1.0, l2_norm(rhsp)));
}

TEST_CASE("LinearPropagator: identity, semigroup, single-mode envelope") {
    auto g = grid64();
    FluidParams par;
    LinearPropagator prop(g, par);

    Field theta = with_linf(random_band_field(g, Rank::vector, 1, 20, 41), 1.0);
    Field u = with_linf(random_band_field(g, Rank::vector, 1, 20, 42), 1.0);

    auto [t0, u0] = prop.apply(theta, u, 0.0);
    CHECK(l2_distance(t0, theta) < 1e-14 * l2_norm(theta));
    CHECK(l2_distance(u0, u) < 1e-14 * l2_norm(u));

    auto [t1, u1] = prop.apply(theta, u, 0.35);
    auto [t2, u2] = prop.apply(t1, u1, 0.4);
    auto [td, ud] = prop.apply(theta, u, 0.75);
    CHECK(l2_distance(t2, td) < 1e-12 * std::max(1.0, l2_norm(td)));
    CHECK(l2_distance(u2, ud) < 1e-12 * std::max(1.0, l2_norm(ud)));

    // a single solenoidal mode with theta = 0 follows the 2x2 oracle
    Field usol(g, Rank::vector);
    {
        auto r = usol.mutable_real(0);  // u = (sin(3 x2), 0): divergence-free
        for (std::size_t i = 0; i < r.size(); ++i) r[i] = std::sin(3.0 * g->coords(i)[1]);
    }
    Field ztheta(g, Rank::vector);
    const double t = 0.8;
    auto [tho, uo] = prop.apply(ztheta, usol, t);
    auto y = rk4_block(par.alpha, par.mu0, 3.0, t, {0.0, 1.0});
    CHECK(rel_err(l2_norm(uo), std::abs(y[1]) * l2_norm(usol)) < 1e-10);
    CHECK(rel_err(l2_norm(tho), 3.0 * std::abs(y[0]) * l2_norm(usol)) < 1e-10);

    CHECK_THROWS_AS(prop.apply(theta, u, -1.0), std::invalid_argument);
}

TEST_CASE("LinearPropagator: weighted energy decays, plain norm stays bounded") {
    auto g = grid64();
    FluidParams par;
    par.alpha = 1.7;
    par.lambda0 = 0.3;
    LinearPropagator prop(g, par);

    Field theta = with_linf(random_band_field(g, Rank::vector, 1, 18, 51), 1.0);
    Field u = with_linf(random_band_field(g, Rank::vector, 1, 18, 52), 1.0);

    auto weighted_energy = [&](const Field& th, const Field& uu) {
        Field lth = lambda_power(th, -1.0);
        Field pth = project(lth, Proj::P);
        Field qth = project(lth, Proj::Pperp);
        Field pu = project(uu, Proj::P);
        Field qu = project(uu, Proj::Pperp);
        const double a = l2_norm(pth), b = l2_norm(qth), c = l2_norm(pu), d = l2_norm(qu);
        return a * a / par.alpha + b * b / (1.0 + par.alpha) + c * c + d * d;
    };

    double prev = weighted_energy(theta, u);
    const double e0 = prev;
    Field th = theta, uu = u;
    for (int i = 0; i < 12; ++i) {
        auto [tn, un] = prop.apply(th, uu, 0.05);
        th = tn;
        uu = un;
        const double e = weighted_energy(th, uu);
        CHECK(e <= prev * (1.0 + 1e-12));
        prev = e;
    }
    // plain norm bounded via the weight ratio
    const double wmax = std::max({1.0, par.alpha, 1.0 + par.alpha});
    const double wmin = std::min({1.0, par.alpha, 1.0 + par.alpha});
    Field lth0 = lambda_power(theta, -1.0);
    Field lth1 = lambda_power(th, -1.0);
    const double n0sq = l2_norm(lth0) * l2_norm(lth0) + l2_norm(u) * l2_norm(u);
    const double n1sq = l2_norm(lth1) * l2_norm(lth1) + l2_norm(uu) * l2_norm(uu);
    CHECK(n1sq <= (wmax / wmin) * n0sq * (1.0 + 1e-10));
    CHECK(e0 > 0.0);
}

TEST_CASE("propagator agrees with forward Euler to second order") {
    auto g = grid64();
    FluidParams par;
    LinearPropagator prop(g, par);

    Field theta = with_linf(random_band_field(g, Rank::vector, 1, 6, 61), 1.0);
    Field u = with_linf(random_band_field(g, Rank::vector, 1, 6, 62), 1.0);

    auto euler_error = [&](double t) {
        auto [tp, up] = prop.apply(theta, u, t);
        // linear system: d theta = -alpha Lap u - grad div u, d u = A u - theta
        Field dth = -par.alpha * laplacian(u) - gradient(divergence(u));
        Field du = a_operator(u, par) - theta;
        Field th_euler = theta + t * dth;
        Field u_euler = u + t * du;
        return std::sqrt(std::pow(l2_distance(tp, th_euler), 2) +
                         std::pow(l2_distance(up, u_euler), 2));
    };
    const double e1 = euler_error(1e-3);
    const double e2 = euler_error(5e-4);
    const double e4 = euler_error(2.5e-4);
    const double order1 = std::log2(e1 / e2);
    const double order2 = std::log2(e2 / e4);
    CHECK(order1 >= 1.95);
    CHECK(order2 >= 1.95);
}
