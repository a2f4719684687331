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

#include "viscoflux/lp.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace vflux {

namespace {

// smooth 0->1 step on [0, 1]
double smooth_step(double t) {
    if (t <= 0.0) return 0.0;
    if (t >= 1.0) return 1.0;
    const double a = std::exp(-1.0 / t);
    const double b = std::exp(-1.0 / (1.0 - t));
    return a / (a + b);
}

constexpr double kChiOne = 0.75;       // chi == 1 inside this radius
constexpr double kChiZero = 4.0 / 3.0; // chi == 0 beyond this radius

}  // namespace

double lp_chi(double r) { return smooth_step((kChiZero - r) / (kChiZero - kChiOne)); }

double lp_phi(double r) { return lp_chi(r / 2.0) - lp_chi(r); }

DyadicPartition build_partition(GridPtr grid, double R0) {
    if (!(R0 > 0.0)) throw ConfigError("build_partition: R0 must be positive");
    DyadicPartition part;
    part.grid = grid;
    part.R0 = R0;
    part.k0 = int(std::ceil(std::log2(R0)));

    const double rmin = grid->k_scale();  // smallest nonzero lattice |xi|
    const double rmax = grid->k_scale() * grid->max_lattice_norm();
    part.j_min = int(std::ceil(std::log2(rmin * 3.0 / 8.0)));
    part.j_max = int(std::floor(std::log2(rmax * 4.0 / 3.0)));
    if (part.shells() < 3)
        throw ConfigError("build_partition: grid hosts fewer than 3 dyadic shells");

    part.phi_tab_.resize(std::size_t(part.shells()));
    for (int j = part.j_min; j <= part.j_max; ++j) {
        auto& tab = part.phi_tab_[std::size_t(j - part.j_min)];
        tab.resize(grid->nspec());
        const double scale = std::exp2(double(-j));
        for (std::size_t s = 0; s < grid->nspec(); ++s) tab[s] = lp_phi(scale * grid->xi_norm(s));
    }
    return part;
}

BesovSpec BesovSpec::besov(double s, int r_sum) {
    BesovSpec b;
    b.s = s;
    b.sigma = s;
    b.r_sum = r_sum;
    b.validate();
    return b;
}

BesovSpec BesovSpec::hybrid(double s, double sigma, double R0) {
    BesovSpec b;
    b.s = s;
    b.sigma = sigma;
    b.R0 = R0;
    b.validate();
    return b;
}

void BesovSpec::validate() const {
    if (p_int != 2) throw ConfigError("BesovSpec: only p_int = 2 is supported");
    if (r_sum != 1 && r_sum != 2) throw ConfigError("BesovSpec: r_sum must be 1 or 2");
    if (!(R0 > 0.0)) throw ConfigError("BesovSpec: R0 must be positive");
}

Field block(const Field& f, int j, const DyadicPartition& part) {
    Field out(f.gridp(), f.rank());
    if (!part.in_range(j)) return out;  // zero field
    const auto& tab = part.phi_table(j);
    for (int c = 0; c < f.ncomp(); ++c) {
        auto in = f.spec(c);
        auto o = out.mutable_spec(c);
        for (std::size_t s = 0; s < in.size(); ++s) o[s] = tab[s] * in[s];
    }
    return out;
}

Field low_cutoff(const Field& f, int j, const DyadicPartition& part) {
    const Grid& g = f.grid();
    const double scale = std::exp2(double(-j));
    Field out(f.gridp(), f.rank());
    for (int c = 0; c < f.ncomp(); ++c) {
        auto in = f.spec(c);
        auto o = out.mutable_spec(c);
        for (std::size_t s = 0; s < in.size(); ++s) o[s] = lp_chi(scale * g.xi_norm(s)) * in[s];
        o[0] = cplx(0.0, 0.0);  // homogeneous operator: no zero mode
    }
    return out;
}

ShellProfile shell_profile(std::span<const Field* const> fields, const DyadicPartition& part) {
    ShellProfile prof;
    prof.j_min = part.j_min;
    prof.l2sq.assign(std::size_t(part.shells()), 0.0);
    if (fields.empty()) return prof;
    const Grid& g = *part.grid;
    const double vol = std::pow(g.period(), g.dim());
    std::vector<double> weight(g.nspec());
    for (std::size_t s = 0; s < g.nspec(); ++s) weight[s] = vol * g.conj_weight(s);

    for (const Field* f : fields) {
        for (int c = 0; c < f->ncomp(); ++c) {
            auto sp = f->spec(c);
            for (int j = part.j_min; j <= part.j_max; ++j) {
                const auto& tab = part.phi_table(j);
                double acc = 0.0;
                for (std::size_t s = 0; s < sp.size(); ++s) {
                    if (tab[s] == 0.0) continue;
                    acc += weight[s] * tab[s] * tab[s] * std::norm(sp[s]);
                }
                prof.l2sq[std::size_t(j - part.j_min)] += acc;
            }
        }
    }
    return prof;
}

ShellProfile shell_profile(const Field& f, const DyadicPartition& part) {
    const Field* p = &f;
    return shell_profile(std::span<const Field* const>(&p, 1), part);
}

double besov_from_profile(const ShellProfile& prof, double s, int r_sum) {
    double acc = 0.0;
    for (std::size_t i = 0; i < prof.l2sq.size(); ++i) {
        const int j = prof.j_min + int(i);
        const double term = std::exp2(double(j) * s) * std::sqrt(prof.l2sq[i]);
        acc += (r_sum == 1) ? term : term * term;
    }
    return (r_sum == 1) ? acc : std::sqrt(acc);
}

double hybrid_from_profile(const ShellProfile& prof, const BesovSpec& spec) {
    double acc = 0.0;
    for (std::size_t i = 0; i < prof.l2sq.size(); ++i) {
        const int j = prof.j_min + int(i);
        const double w = (std::exp2(double(j)) <= spec.R0) ? spec.s : spec.sigma;
        acc += std::exp2(double(j) * w) * std::sqrt(prof.l2sq[i]);
    }
    return acc;
}

double hybrid_from_profile_side(const ShellProfile& prof, double weight_exp, double R0, bool low_side) {
    double acc = 0.0;
    for (std::size_t i = 0; i < prof.l2sq.size(); ++i) {
        const int j = prof.j_min + int(i);
        const bool low = std::exp2(double(j)) <= R0;
        if (low != low_side) continue;
        acc += std::exp2(double(j) * weight_exp) * std::sqrt(prof.l2sq[i]);
    }
    return acc;
}

namespace {
void require_mean_zero(std::span<const Field* const> fields) {
    for (const Field* f : fields)
        if (f->mean_fraction() > 1e-10)
            throw std::invalid_argument("homogeneous norm undefined at xi = 0 (field has nonzero mean)");
}
}  // namespace

double besov_norm(std::span<const Field* const> fields, const BesovSpec& spec, const DyadicPartition& part) {
    spec.validate();
    require_mean_zero(fields);
    return besov_from_profile(shell_profile(fields, part), spec.s, spec.r_sum);
}

double besov_norm(const Field& f, const BesovSpec& spec, const DyadicPartition& part) {
    const Field* p = &f;
    return besov_norm(std::span<const Field* const>(&p, 1), spec, part);
}

double hybrid_norm(std::span<const Field* const> fields, const BesovSpec& spec, const DyadicPartition& part) {
    spec.validate();
    require_mean_zero(fields);
    return hybrid_from_profile(shell_profile(fields, part), spec);
}

double hybrid_norm(const Field& f, const BesovSpec& spec, const DyadicPartition& part) {
    const Field* p = &f;
    return hybrid_norm(std::span<const Field* const>(&p, 1), spec, part);
}

double chemin_lerner_norm(std::span<const ShellProfile> series, double dt, const BesovSpec& spec) {
    const bool finite_q = std::isfinite(spec.q_time);
    if (finite_q && series.size() < 2)
        throw std::invalid_argument("chemin_lerner_norm: need at least 2 samples for finite q");
    if (series.empty()) return 0.0;
    if (finite_q && spec.q_time != 1.0 && spec.q_time != 2.0)
        throw ConfigError("chemin_lerner_norm: q_time must be 1, 2 or infinity");

    const std::size_t nshell = series[0].l2sq.size();
    const int j_min = series[0].j_min;
    double acc = 0.0;
    for (std::size_t i = 0; i < nshell; ++i) {
        const int j = j_min + int(i);
        double block_lq;
        if (!finite_q) {
            block_lq = 0.0;
            for (const auto& prof : series) block_lq = std::max(block_lq, std::sqrt(prof.l2sq[i]));
        } else {
            // trapezoid of y^q, then the q-th root
            double integral = 0.0;
            for (std::size_t t = 0; t + 1 < series.size(); ++t) {
                const double y0 = std::pow(std::sqrt(series[t].l2sq[i]), spec.q_time);
                const double y1 = std::pow(std::sqrt(series[t + 1].l2sq[i]), spec.q_time);
                integral += 0.5 * dt * (y0 + y1);
            }
            block_lq = std::pow(integral, 1.0 / spec.q_time);
        }
        const double w = (std::exp2(double(j)) <= spec.R0) ? spec.s : spec.sigma;
        acc += std::exp2(double(j) * w) * block_lq;
    }
    return acc;
}

double chemin_lerner_norm(std::span<const Field* const> series, double dt, const BesovSpec& spec,
                          const DyadicPartition& part) {
    std::vector<ShellProfile> profs;
    profs.reserve(series.size());
    for (const Field* f : series) profs.push_back(shell_profile(*f, part));
    return chemin_lerner_norm(profs, dt, spec);
}

Field paraproduct(const Field& f, const Field& g, const DyadicPartition& part) {
    if (f.gridp().get() != g.gridp().get())
        throw std::invalid_argument("paraproduct: grid mismatch");
    if (f.rank() != Rank::scalar)
        throw std::invalid_argument("paraproduct: low-frequency factor must be scalar");
    Field out(g.gridp(), g.rank());
    for (int k = part.j_min; k <= part.j_max; ++k) {
        Field sf = low_cutoff(f, k - 1, part);
        Field dg = block(g, k, part);
        // accumulate the pointwise product in physical space
        auto rs = sf.real(0);
        for (int c = 0; c < g.ncomp(); ++c) {
            auto rd = dg.real(c);
            auto o = out.mutable_real(c);
            for (std::size_t i = 0; i < o.size(); ++i) o[i] += rs[i] * rd[i];
        }
    }
    dealias_inplace(out);
    return out;
}

Field remainder(const Field& f, const Field& g, const DyadicPartition& part) {
    if (f.gridp().get() != g.gridp().get())
        throw std::invalid_argument("remainder: grid mismatch");
    if (f.rank() != Rank::scalar)
        throw std::invalid_argument("remainder: first factor must be scalar");
    std::vector<Field> gblocks;
    gblocks.reserve(std::size_t(part.shells()));
    for (int k = part.j_min; k <= part.j_max; ++k) gblocks.push_back(block(g, k, part));

    Field out(g.gridp(), g.rank());
    for (int k = part.j_min; k <= part.j_max; ++k) {
        Field fk = block(f, k, part);
        Field gnb(g.gridp(), g.rank());
        for (int kp = k - 1; kp <= k + 1; ++kp)
            if (part.in_range(kp)) gnb += gblocks[std::size_t(kp - part.j_min)];
        auto rf = fk.real(0);
        for (int c = 0; c < g.ncomp(); ++c) {
            auto rg = gnb.real(c);
            auto o = out.mutable_real(c);
            for (std::size_t i = 0; i < o.size(); ++i) o[i] += rf[i] * rg[i];
        }
    }
    dealias_inplace(out);
    return out;
}

void write_norm_report(std::ostream& os, const std::string& field_id, const ShellProfile& prof,
                       const BesovSpec& spec) {
    for (std::size_t i = 0; i < prof.l2sq.size(); ++i) {
        const int j = prof.j_min + int(i);
        const bool low = std::exp2(double(j)) <= spec.R0;
        const double w = low ? spec.s : spec.sigma;
        os << field_id << ',' << j << ',' << std::sqrt(prof.l2sq[i]) << ','
           << std::exp2(double(j) * w) << ',' << (low ? "low" : "high") << '\n';
    }
}

}  // namespace vflux
