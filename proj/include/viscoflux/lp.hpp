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

#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "viscoflux/field.hpp"

namespace vflux {

// Radial cutoff profiles.  chi is 1 on {r <= 3/4} and vanishes for
// {r >= 4/3}; phi(r) = chi(r/2) - chi(r) is supported in the annulus
// {3/4 <= r <= 8/3} and the dilates phi(2^-j r) telescope to 1.
double lp_chi(double r);
double lp_phi(double r);

/// Dyadic partition of the discrete frequency lattice.  Shell j carries
/// the multiplier phi(2^-j |xi|); indices [j_min, j_max] cover every
/// nonzero lattice frequency.
struct DyadicPartition {
    GridPtr grid;
    double R0 = 1.0;  // hybrid low/high threshold
    int k0 = 0;       // ceil(log2(R0))
    int j_min = 0;
    int j_max = 0;

    int shells() const { return j_max - j_min + 1; }
    bool in_range(int j) const { return j >= j_min && j <= j_max; }
    // shell multiplier phi(2^-j |xi|) evaluated on stored spectral indices
    const std::vector<double>& phi_table(int j) const { return phi_tab_.at(std::size_t(j - j_min)); }

    std::vector<std::vector<double>> phi_tab_;
};

// k0 = ceil(log2(R0)); fails if fewer than 3 shells fit on the grid
DyadicPartition build_partition(GridPtr grid, double R0);

/// Norm selector.  p_int is fixed to 2; r_sum may be 1 or 2; sigma is
/// the high-frequency exponent of the hybrid norm (sigma = s recovers
/// the plain Besov norm); q_time selects the temporal exponent of
/// Chemin-Lerner norms (1, 2 or infinity).
struct BesovSpec {
    double s = 0.0;
    double sigma = 0.0;
    int p_int = 2;
    int r_sum = 1;
    double R0 = 1.0;
    double q_time = std::numeric_limits<double>::infinity();

    static BesovSpec besov(double s, int r_sum = 1);
    static BesovSpec hybrid(double s, double sigma, double R0);
    BesovSpec with_q(double q) const {
        BesovSpec b = *this;
        b.q_time = q;
        return b;
    }
    void validate() const;
};

// homogeneous dyadic block phi(2^-j D) f; zero field outside [j_min, j_max]
Field block(const Field& f, int j, const DyadicPartition& part);
// low-frequency cut-off chi(2^-j D) f = sum_{k <= j-1} block(f, k)
Field low_cutoff(const Field& f, int j, const DyadicPartition& part);

/// Per-shell squared L2 norms of the blocks of a stack of fields,
/// accumulated over all fields and components.  This is the raw material
/// of every Besov-type norm here.
struct ShellProfile {
    int j_min = 0;
    std::vector<double> l2sq;

    int j_max() const { return j_min + int(l2sq.size()) - 1; }
    double shell_l2(int j) const {
        int i = j - j_min;
        return (i >= 0 && i < int(l2sq.size())) ? std::sqrt(l2sq[std::size_t(i)]) : 0.0;
    }
};

ShellProfile shell_profile(std::span<const Field* const> fields, const DyadicPartition& part);
ShellProfile shell_profile(const Field& f, const DyadicPartition& part);

// norms assembled from a profile (no mean-zero check; blocks ignore xi = 0)
double besov_from_profile(const ShellProfile& prof, double s, int r_sum);
double hybrid_from_profile(const ShellProfile& prof, const BesovSpec& spec);
// restrict the block sum to the low (2^k <= R0) or high side
double hybrid_from_profile_side(const ShellProfile& prof, double weight_exp, double R0, bool low_side);

// homogeneous Besov norm; requires a mean-zero field
double besov_norm(const Field& f, const BesovSpec& spec, const DyadicPartition& part);
double besov_norm(std::span<const Field* const> fields, const BesovSpec& spec, const DyadicPartition& part);
// hybrid norm with split at 2^k <= R0
double hybrid_norm(const Field& f, const BesovSpec& spec, const DyadicPartition& part);
double hybrid_norm(std::span<const Field* const> fields, const BesovSpec& spec, const DyadicPartition& part);

// Chemin-Lerner norm of a uniformly sampled time series of profiles:
// blockwise temporal L^q (trapezoid quadrature for finite q), then the
// hybrid-weighted block sum
double chemin_lerner_norm(std::span<const ShellProfile> series, double dt, const BesovSpec& spec);
double chemin_lerner_norm(std::span<const Field* const> series, double dt, const BesovSpec& spec,
                          const DyadicPartition& part);

// Bony operators: paraproduct T_f g and remainder R(f, g); the three
// pieces T_f g + T_g f + R(f, g) reassemble the dealiased product
Field paraproduct(const Field& f, const Field& g, const DyadicPartition& part);
Field remainder(const Field& f, const Field& g, const DyadicPartition& part);

// rows: field_id, j, shell_norm, weight 2^{js}, side in {low, high}
void write_norm_report(std::ostream& os, const std::string& field_id, const ShellProfile& prof,
                       const BesovSpec& spec);

}  // namespace vflux
