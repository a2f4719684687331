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

#include <array>
#include <complex>
#include <map>
#include <mutex>
#include <utility>

#include "viscoflux/field.hpp"
#include "viscoflux/model.hpp"

namespace vflux {

enum class Regime { oscillatory, critical, overdamped };

const char* regime_name(Regime r);

/// Per-frequency record of the two hyperbolic-parabolic 2x2 blocks:
/// eigenvalues, regime tags and the high-frequency damping limits.
struct ModeAnalysis {
    double xi_norm = 0.0;
    Regime regime_P = Regime::oscillatory;
    Regime regime_Pperp = Regime::oscillatory;
    std::array<cplx, 2> eigs_P{};      // lambda_+, lambda_-
    std::array<cplx, 2> eigs_Pperp{};
    std::pair<double, double> damping_limits{};  // (alpha/mu0, (1+alpha)/(lambda0+2mu0))
};

// eigenvalues of [[0, a k], [-k, -m k^2]]; the slow branch is second
std::array<cplx, 2> green_block_eigs(double a_coef, double visc, double k);

// closed-form analysis of both blocks, cross-checked against a QR
// eigendecomposition away from the defective boundary
ModeAnalysis green_eigs(double xi_norm, const FluidParams& params);

// (alpha/mu0, (1+alpha)/(lambda0+2mu0)), the |xi| -> infinity limits of
// the slow branches
std::pair<double, double> theta_damping_rates(const FluidParams& params);

// |xi| where the block discriminant changes sign, located by bisection
double regime_boundary(double a_coef, double visc);

// exp(G t) for G = [[0, a k], [-k, -m k^2]], closed form, row-major;
// exact through the defective (double-root) case
std::array<double, 4> green_expm(double a_coef, double visc, double k, double t);

enum class Proj { P, Pperp };

// Helmholtz projections: P = I - xi xi^T/|xi|^2, Pperp = xi xi^T/|xi|^2
Field project(const Field& f, Proj which);

// Lambda^s = |xi|^s multiplier; negative powers require a mean-zero field
Field lambda_power(const Field& f, double s);

// effective velocities w = P u + (1/mu0)(-Lap)^-1 P theta and the
// perpendicular analog
std::pair<Field, Field> effective_velocities(const Field& u, const Field& theta,
                                             const FluidParams& params);

/// Exact per-mode solution operator of the linear theta-u system: the
/// field is Helmholtz-split, each part evolved by the closed-form 2x2
/// exponential of its block, then recombined.
class LinearPropagator {
  public:
    LinearPropagator(GridPtr grid, FluidParams params);

    // advance (theta, u) by time t >= 0
    std::pair<Field, Field> apply(const Field& theta, const Field& u, double t) const;

    const FluidParams& params() const { return params_; }

  private:
    struct Tables {
        std::vector<std::array<double, 4>> ep;      // P block per mode
        std::vector<std::array<double, 4>> eperp;   // Pperp block per mode
    };
    const Tables& tables_for(double t) const;

    GridPtr grid_;
    FluidParams params_;
    mutable std::map<double, Tables> cache_;
    mutable std::mutex cache_mutex_;
};

}  // namespace vflux
