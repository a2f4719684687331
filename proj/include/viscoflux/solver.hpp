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

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "viscoflux/lp.hpp"
#include "viscoflux/model.hpp"
#include "viscoflux/spectral.hpp"

namespace vflux {

enum class SimMode { primitive, perturbation, linear };
enum class Scheme { etdrk2, imex_bdf2 };

const char* sim_mode_name(SimMode m);
const char* scheme_name(Scheme s);

struct InitSpec {
    double eta = 1e-3;   // target size of the initial perturbation norm
    int kmin = 1;        // integer lattice band
    int kmax = 4;
    std::uint64_t seed = 7;
    bool enforce_compat = false;  // project onto rho det F = 1, div(rho F^T) = 0
};

struct SimConfig {
    int n = 2;
    int N = 64;
    double L = kTwoPi;
    double dt = 0.01;
    double t_end = 1.0;
    double output_dt = 0.05;
    double cfl = 0.5;
    Scheme scheme = Scheme::etdrk2;
    SimMode mode = SimMode::perturbation;
    FluidParams fluid;
    InitSpec init;
    bool dealias = true;
    double R0 = 0.0;  // <= 0 selects the regime-matched default

    // test hook: evolve F by (grad u)^T F instead of (grad u) F in the
    // primitive formulation; used by the convention mutation test
    bool mutate_gradient_convention = false;

    void validate() const;
    double resolved_R0() const;
};

/// Mode-dependent state bundle; only the fields of the active mode are
/// populated.
struct SimState {
    SimMode mode = SimMode::perturbation;
    PrimitiveState prim;
    PerturbationState pert;
    Field theta;  // linear mode
    Field u_lin;  // linear mode
};

/// Per-snapshot diagnostic record: squared per-shell block norms of the
/// analyzed fields plus scalar probes.  Profiles are additive in their
/// l2sq entries, so stacked-field profiles are sums of these.
struct Snapshot {
    double t = 0.0;
    ShellProfile p, tau, u, lth, theta;
    ShellProfile f_minus_i;  // primitive mode only
    double mean_rho = 1.0;
    double min_detF = 1.0;
    double max_u = 0.0;
    double l2_p = 0.0, l2_tau = 0.0, l2_u = 0.0, l2_theta = 0.0, l2_g = 0.0;
    double l2_compat = 0.0;  // || rho det F - 1 ||_L2 (primitive mode)
};

struct Trajectory {
    SimConfig config;
    double R0 = 0.0;
    int j_min = 0, j_max = 0;
    std::vector<Snapshot> snaps;
    bool completed = true;
    std::string error;
    SimState final_state;
};

/// Time integrator: exact per-mode treatment of the stiff linear part
/// (the full constant-coefficient linearization in perturbation mode,
/// the viscous operator in primitive mode, the whole system in linear
/// mode) with explicit dealiased nonlinear terms.
class Stepper {
  public:
    explicit Stepper(SimConfig cfg);

    const SimConfig& config() const { return cfg_; }
    const GridPtr& grid() const { return grid_; }
    const DyadicPartition& partition() const { return part_; }
    const LinearPropagator& propagator() const { return prop_; }

    SimState make_initial() const;

    // one time step; throws NumericsError on blow-up or NaN
    void advance(SimState& state, double h) const;

    // advective step-size cap 0.5 dx / max(1, |u|)
    double cfl_cap(const SimState& state) const;

    Snapshot record(const SimState& state, double t) const;

    // number of steps taken since construction (for error reports)
    long steps_taken() const { return steps_; }

  private:
    struct PertCache;
    void advance_perturbation(SimState& state, double h) const;
    void advance_primitive(SimState& state, double h) const;
    const PertCache& pert_cache(double h) const;

    SimConfig cfg_;
    GridPtr grid_;
    DyadicPartition part_;
    LinearPropagator prop_;
    mutable std::shared_ptr<PertCache> pcache_;
    mutable long steps_ = 0;
    // two-step history for imex_bdf2 (rho/u/F in primitive mode rides in
    // the same slots as p/u/tau)
    mutable bool bdf_primed_ = false;
    mutable double bdf_h_ = 0.0;
    mutable Field bdf_prev_y_p_, bdf_prev_y_u_, bdf_prev_y_tau_;
    mutable Field bdf_prev_n_p_, bdf_prev_n_u_, bdf_prev_n_tau_;
};

SimState initial_data(const SimConfig& cfg);
Trajectory simulate(const SimConfig& cfg);

/// Side-by-side run of the primitive and perturbation formulations from
/// matched initial data; relative L2 residuals per snapshot.
struct CrossCheckReport {
    std::vector<double> t;
    std::vector<double> res_p, res_tau, res_u;
    double final_residual() const;
};

CrossCheckReport cross_check(const SimConfig& cfg);

// versioned little-endian state snapshot files
void write_state(const std::string& path, const SimState& state, double t, double L);
struct LoadedState {
    SimState state;
    double t = 0.0;
    double L = kTwoPi;
};
LoadedState read_state(const std::string& path);

}  // namespace vflux
