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

#include <span>
#include <string>
#include <vector>

#include "viscoflux/solver.hpp"

namespace vflux {

/// Energy functionals accumulated up to a trajectory time: running sups
/// and trapezoid integrals of the frequency-split norms, plus the full
/// solution norm.
struct EnergyReport {
    double t = 0.0;
    double low_sup = 0.0;       // sup ||(p,tau,u,L^-1 theta)||^l at n/2-1
    double low_integral = 0.0;  // int ||(u,L^-1 theta)||^l at n/2+1
    double high_sup = 0.0;      // sup(||u||^h at n/2-1 + ||(p,tau,L^-1 theta)||^h at n/2)
    double high_int_u = 0.0;    // int ||u||^h at n/2+1
    double high_int_lth = 0.0;  // int ||L^-1 theta||^h at n/2
    double e_norm = 0.0;        // ||(p,tau; u,theta)||_E up to t

    double e_low() const { return low_sup + low_integral; }
    double e_high() const { return high_sup + high_int_u + high_int_lth; }
};

// report at the latest snapshot time <= t
EnergyReport energy_report(const Trajectory& traj, double t, double R0);
// one report per snapshot (running quantities)
std::vector<EnergyReport> energy_series(const Trajectory& traj, double R0);

enum class ShellGroup { p, tau, u, lth, theta, f_minus_i };

std::vector<double> snapshot_times(const Trajectory& traj);
// per-snapshot L2 norm of one dyadic shell of a recorded group
std::vector<double> shell_series(const Trajectory& traj, ShellGroup group, int j);
// per-snapshot weighted sum over one side of the hybrid split
std::vector<double> side_series(const Trajectory& traj, ShellGroup group, double weight_exp,
                                double R0, bool low_side);

/// Least-squares exponential rate of a positive series on [t0, t1]:
/// value ~ C exp(-rate t).  Envelope mode fits the local maxima only
/// (for oscillatory-regime signals).
struct DecayFit {
    double rate = 0.0;
    double residual = 0.0;  // rms misfit of log(value)
    int npoints = 0;
};

DecayFit decay_fit(std::span<const double> t, std::span<const double> v, double t0, double t1,
                   bool envelope = false);

/// Shape report for the a priori inequality: the smallest constant that
/// closes X(T) <= C (X0 + X(T)^2 (1 + X(T))^{n+3}) over the sampled
/// horizon.  A report, never an assertion.
struct AprioriReport {
    std::vector<double> t;
    std::vector<double> X;  // running solution norm
    double X0 = 0.0;
    double C_needed = 0.0;
};

AprioriReport apriori_report(const Trajectory& traj);

/// Tracked quantities against M_report * eta.  Growth of the (p, tau)
/// norms alone is not a failure; only the solution-norm row gates.
struct MonitorRow {
    std::string quantity;
    double bound = 0.0;
    double max_value = 0.0;
    bool crossed = false;
    double first_crossing = -1.0;
};

struct MonitorReport {
    std::vector<MonitorRow> rows;
    bool ok = true;           // solution-norm row never crossed
    double first_crossing = -1.0;
};

MonitorReport theorem_monitor(const Trajectory& traj, double eta, double M_report);

// number of per-shell violations of the discrete Cauchy-Schwarz
// interpolation (L2-in-time)^2 <= (Linf-in-time)(L1-in-time) over the
// recorded series of one group; exact in real arithmetic
int interpolation_violations(const Trajectory& traj, ShellGroup group);

}  // namespace vflux
