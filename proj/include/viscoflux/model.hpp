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

#include "viscoflux/field.hpp"

namespace vflux {

/// Fluid and elasticity parameters.  The pressure law is the gamma-law
/// Pi(rho) = rho^gamma / gamma, normalized so that Pi'(1) = 1 for every
/// gamma.  Viscosities are affine in density: mu(rho) = mu0 + mu1*(rho-1);
/// the default mu1 = lambda1 = 0 gives constant coefficients.
struct FluidParams {
    double mu0 = 1.0;      // shear viscosity mu(1)
    double lambda0 = 0.0;  // second viscosity lambda(1)
    double alpha = 1.0;    // elastic parameter
    double gamma = 1.4;    // pressure exponent
    double mu1 = 0.0;      // d mu / d rho
    double lambda1 = 0.0;  // d lambda / d rho
    double delta_det = 0.1;  // guard on det F

    void validate() const;

    double nu_perp() const { return lambda0 + 2.0 * mu0; }

    // pressure and its companions, p = Pi(1+a) - Pi(1)
    double pressure(double a) const;
    double K_of(double a) const;  // Pi'(1+a)(1+a) - 1
    double I_of(double a) const { return a / (1.0 + a); }
    double a_of_p(double p) const;  // inverse of pressure()

    double mu_tilde(double a) const { return mu1 * a; }
    double lambda_tilde(double a) const { return lambda1 * a; }
    bool constant_viscosity() const { return mu1 == 0.0 && lambda1 == 0.0; }

    // hybrid threshold at the eigenvalue-regime transition, rounded up
    // to the next power of two
    double default_R0() const;
};

/// (rho, u, F) with rho > 0 and det F bounded away from zero.
struct PrimitiveState {
    Field rho;  // scalar
    Field u;    // vector
    Field F;    // matrix
};

/// (a, p, tau, u) around the equilibrium (1, I, 0); a and p are linked
/// by the pressure law, tau is symmetric.  Zero modes picked up by the
/// nonlinear evolution ride inside the Fourier coefficients; homogeneous
/// norms ignore them structurally.
struct PerturbationState {
    Field a;    // scalar, rho - 1
    Field p;    // scalar
    Field tau;  // symmetric matrix
    Field u;    // vector
};

/// Effective fluxes: theta = grad p - alpha div tau and G = tau - p Id.
struct FluxPair {
    Field theta;  // vector
    Field gflux;  // matrix
};

struct PressureMaps {
    Field p;   // Pi(1+a) - Pi(1)
    Field K;   // Pi'(1+a)(1+a) - 1
    Field I;   // a/(1+a)
};

struct PerturbationRhs {
    Field F1;  // scalar
    Field F2;  // vector
    Field F3;  // matrix
};

struct FluxRhs {
    Field F1_tilde;    // vector
    Field F3_tilde;    // vector
    Field F3_minus_F1_id;  // matrix, right side of the G equation
};

// tau = F F^T / det F - I; throws when det F dips below the guard,
// naming the worst grid point
Field tau_from_F(const Field& F, double delta_det = 0.1);

// determinant of a matrix field, pointwise
Field det_field(const Field& F);

PressureMaps pressure_maps(const Field& a, const FluidParams& params);

FluxPair effective_fluxes(const PerturbationState& state, const FluidParams& params);

// A u = mu0 Laplace u + (lambda0 + mu0) grad div u
Field a_operator(const Field& u, const FluidParams& params);

PerturbationRhs rhs_perturbation(const PerturbationState& state, const FluidParams& params);

FluxRhs rhs_flux(const PerturbationState& state, const FluidParams& params);

PerturbationState perturbation_from_primitive(const PrimitiveState& prim, const FluidParams& params);

// invariant checks; throw on violation
void check_primitive(const PrimitiveState& s, const FluidParams& params);
void check_perturbation(const PerturbationState& s, const FluidParams& params);

}  // namespace vflux
