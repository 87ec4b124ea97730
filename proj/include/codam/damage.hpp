#pragma once

#include <utility>

#include "codam/admissible.hpp"
#include "codam/mesh.hpp"

namespace codam {

// One implicit damage step at frozen displacement: minimize over the
// nodal box [0, z_prev] on active nodes
//
//   J(z) = sum_K |K| [ (1/p)|grad z|^p + (1/2)(g(zbar)+eps) C e : e
//                      - alpha (zbar - zbar_prev) + (beta/(2 tau)) (zbar - zbar_prev)^2 ]
//
// over active elements K. Inactive nodes stay at their z_prev value.
struct IncrementalDamageProblem {
    const Mesh* mesh = nullptr;
    const Material* material = nullptr;
    const AdmissibleRegion* region = nullptr;
    const ScalarField* z_prev = nullptr;  // previous accepted damage, also the box upper bound
    const VectorField* u = nullptr;       // frozen displacement
    double epsilon = 0.0;
    double tau = 1.0;
    double theta_z = 1e-8;
    double kkt_tol = 1e-8;   // max-norm of the projected gradient map at unit step
    int max_iterations = 20000;
};

struct ComplementarityReport {
    ScalarField multiplier;              // r >= 0, supported where z <= theta_z
    double stationarity_residual = 0.0;  // projected gradient max-norm at exit
    double complementarity_gap = 0.0;    // max_i |r_i z_i|
    int iterations = 0;
};

// Value of the incremental functional at z.
double incremental_energy(const IncrementalDamageProblem& prob, const ScalarField& z);

// Nodal gradient of the incremental functional; entries of inactive
// nodes are 0.
ScalarField incremental_gradient(const IncrementalDamageProblem& prob, const ScalarField& z);

// Projected gradient descent with Barzilai-Borwein step initialization
// and a nonmonotone backtracking line search on the projection arc.
// Deterministic. Throws std::runtime_error on nonconvergence.
std::pair<ScalarField, ComplementarityReport> solve_damage_step(
    const IncrementalDamageProblem& prob);

// Residual of the damage variational inequality at z: the positive part
// of the gradient where z > theta_z plus the complementarity gap of the
// obstacle multiplier r = max(G, 0) where z <= theta_z. Zero (up to the
// KKT tolerance) certifies the step.
double vi_residual(const IncrementalDamageProblem& prob, const ScalarField& z);

}  // namespace codam
