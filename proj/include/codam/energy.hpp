#pragma once

#include <vector>

#include "codam/admissible.hpp"
#include "codam/equilibrium.hpp"
#include "codam/mesh.hpp"

namespace codam {

// Stored free energy split into its gradient and elastic parts. All
// integrals run over active elements only; the strain is taken as 0 off
// the region.
struct EnergyBreakdown {
    double gradient = 0.0;
    double elastic = 0.0;
    double total() const { return gradient + elastic; }
};

// One audited time step of a run.
struct LedgerRow {
    double t = 0.0;
    double e_total = 0.0;
    double e_grad = 0.0;
    double e_elastic = 0.0;
    double diss_inc = 0.0;
    double work_inc = 0.0;
    double jump_inc = 0.0;
    double jump_cum = 0.0;
    double slack = 0.0;
    double vi_res = 0.0;
    double eq_res = 0.0;
    int n_active = 0;
    int event_flag = 0;  // 1 on an exclusion step
};

// An exclusion event: elements dropped for losing their Dirichlet
// connection, the energy they take with them, and the post-jump energy.
struct JumpEvent {
    double t = 0.0;
    std::vector<int> excluded_elements;
    double j_s = 0.0;       // energy released by the jump
    double e_s_plus = 0.0;  // reduced energy of the truncated state
};

struct ReducedEnergyResult {
    EnergyBreakdown energy;
    VectorField u;
    AdmissibleRegion region;
    double eq_residual = 0.0;
};

struct GammaProbeReport {
    std::vector<double> epsilons;
    std::vector<double> deltas;
    std::vector<double> values;
    double limit_estimate = 0.0;       // last probe value
    double monotonicity_defect = 0.0;  // max positive increase along the sequence
};

struct SolveOptions {
    double tol = 1e-10;
    int max_iterations = 20000;
};

// (1/p)|grad z|^p + (1/2)(g(zbar)+eps) C e : e integrated over the
// active elements (one-point quadrature, exact for P1 data).
EnergyBreakdown free_energy(const Mesh& mesh, const AdmissibleRegion& region, const Material& mat,
                            const VectorField& u, const ScalarField& z, double epsilon);

// Same integrand summed over an explicit element subset.
EnergyBreakdown restricted_energy(const Mesh& mesh, const Material& mat, const VectorField& u,
                                  const ScalarField& z, double epsilon,
                                  const std::vector<int>& elements);

// Infimum of the free energy over displacements matching b on the active
// Dirichlet boundary, attained by the equilibrium solve on the region
// carved from {z > theta_z}. Requires epsilon > 0 or all active nodal
// z > theta_z (guaranteed by the carving).
ReducedEnergyResult reduced_energy(const Mesh& mesh, const Material& mat, const ScalarField& z,
                                   const VectorField& b_values, double epsilon, double theta_z,
                                   const SolveOptions& opts = {});

// Reduced energies along paired schedules (eps_i, delta_i), evaluated at
// the nodal clamp (z - delta_i)^+. Both schedules must have equal
// length, be strictly positive and tend to 0. The last value estimates
// the vanishing-regularization limit.
GammaProbeReport gamma_probe(const Mesh& mesh, const Material& mat, const ScalarField& z,
                             const VectorField& b_values, const std::vector<double>& eps_schedule,
                             const std::vector<double>& delta_schedule, double theta_z,
                             const SolveOptions& opts = {});

// Energy bookkeeping of one exclusion: e_s_plus is the reduced energy of
// the truncated state and j_s the drop from the pre-truncation energy.
JumpEvent jump_energy(const Mesh& mesh, const Material& mat, const VectorField& u_before,
                      const ScalarField& z_before, const AdmissibleRegion& region_before,
                      const ScalarField& z_after, const std::vector<int>& excluded, double t,
                      const VectorField& b_values, double epsilon, double theta_z,
                      const SolveOptions& opts = {});

// Dissipation charged to one step: sum_K |K| (alpha |dzbar| + beta dzbar^2 / tau)
// over active elements.
double dissipation_increment(const Mesh& mesh, const AdmissibleRegion& region, const Material& mat,
                             const ScalarField& z_new, const ScalarField& z_prev, double tau);

// Builds the next ledger row and its balance slack
//   slack = (E_prev + work) - (E_new + dissipation + jump).
// Acceptance of the row against a tolerance is the caller's decision.
LedgerRow audit_step(const LedgerRow& prev, double t_new, const EnergyBreakdown& e_new,
                     double diss_inc, double work_inc, double jump_inc, double vi_res,
                     double eq_res, int n_active, bool is_jump);

}  // namespace codam
