#pragma once

#include "codam/admissible.hpp"
#include "codam/mesh.hpp"

namespace codam {

// Compressed sparse row matrix. Symmetric matrices are stored in full so
// the matvec needs no special casing.
struct SparseMatrix {
    int n = 0;
    std::vector<int> row_ptr;
    std::vector<int> col;
    std::vector<double> val;

    void multiply(const std::vector<double>& x, std::vector<double>& y) const;
};

// Linear elasticity on the active region with element stiffness factor
// g(zbar_K) + epsilon and displacement data imposed on the active
// Dirichlet boundary (gamma1 edge endpoints). Inactive nodes carry u = 0.
struct EquilibriumProblem {
    const Mesh* mesh = nullptr;
    const Material* material = nullptr;
    const AdmissibleRegion* region = nullptr;
    const ScalarField* z = nullptr;
    const VectorField* dirichlet_values = nullptr;  // nodal samples of b
    double epsilon = 0.0;
    double theta_z = 1e-8;
    double tol = 1e-10;       // relative residual target, preconditioned norm
    int max_iterations = 20000;
};

struct AssembledSystem {
    SparseMatrix matrix;            // over free DOFs, symmetric positive definite
    std::vector<double> rhs;        // load from the Dirichlet lift
    std::vector<int> node_dof;      // first free DOF of each node, -1 if constrained or inactive
    std::vector<char> constrained;  // node carries Dirichlet data
    int n_free = 0;
};

struct EquilibriumSolution {
    VectorField u;           // full nodal field: data on gamma1, 0 off the region
    double residual = 0.0;   // relative preconditioned residual at exit
    int iterations = 0;
};

// Builds the reduced system over free DOFs (active nodes not on gamma1).
// Throws std::runtime_error if the problem is degenerate: an active
// element with min nodal z <= theta_z while epsilon == 0, or an active
// component without a Dirichlet edge (a singular system).
AssembledSystem assemble(const EquilibriumProblem& problem);

// Conjugate gradients with diagonal preconditioning on the assembled
// system. Deterministic; throws std::runtime_error on nonconvergence or
// on a direction of nonpositive curvature.
EquilibriumSolution solve_equilibrium(const EquilibriumProblem& problem);

// Boundary work increment sum_K |K| (g(zbar_K)+eps) C e_K(u) : e(b_rate) * tau
// over active elements.
double stress_power(const Mesh& mesh, const AdmissibleRegion& region, const Material& mat,
                    const VectorField& u, const ScalarField& z, const VectorField& b_rate,
                    double epsilon, double tau);

}  // namespace codam
