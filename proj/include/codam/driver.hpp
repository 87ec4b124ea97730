#pragma once

#include <string>
#include <vector>

#include "codam/config.hpp"
#include "codam/damage.hpp"
#include "codam/energy.hpp"

namespace codam {

// Full state after an accepted step. The step size and streak counter
// ride along so a restarted run retraces the adaptive stepping exactly.
struct TrajectoryState {
    double t = 0.0;
    ScalarField z;
    VectorField u;
    AdmissibleRegion region;
    double epsilon_used = 0.0;
    double tau_next = 0.0;
    int clean_streak = 0;
    double e_ref = 0.0;  // initial reduced energy, audit tolerance reference
};

struct RunResult {
    std::vector<LedgerRow> ledger;          // row 0 describes the initial state
    std::vector<TrajectoryState> states;    // parallel to ledger
    std::vector<JumpEvent> jumps;
};

// Quasi-static evolution by adaptive incremental steps. Each accepted
// step staggers equilibrium and damage until the damage VI certificate
// holds at the refreshed displacement, recomputes the
// admissible region, charges any disconnection jump, and audits the
// energy balance. A step whose audit slack falls below
// -audit_tol (1 + min(E_prev, E_0)) or whose solvers fail is rejected
// and retried at half the step size; five consecutive clean steps grow
// the step by 1.25x up to the configured tau. Throws std::runtime_error
// with the failing certificate once tau_min is undercut.
RunResult run(const Mesh& mesh, const SimulationConfig& cfg);

// Same loop started from an existing state; initial_row must be the
// ledger row that produced initial (its cumulative columns continue).
RunResult run_from(const Mesh& mesh, const SimulationConfig& cfg, const TrajectoryState& initial,
                   const LedgerRow& initial_row);

// Regularization study on a frozen damage field: for each epsilon the
// whole-mesh regularized equilibrium is solved under the datum b.
struct ContinuationRow {
    double epsilon = 0.0;
    double energy_total = 0.0;     // gradient + elastic over the whole mesh
    double elastic_dead = 0.0;     // elastic energy on elements with all nodes <= theta_z
    double strain_norm_live = 0.0; // L2 strain norm over {z > theta_z} elements
    double eq_residual = 0.0;
};

struct ContinuationReport {
    std::vector<ContinuationRow> rows;
    double strain_ratio = 0.0;         // max/min of strain_norm_live
    double monotonicity_defect = 0.0;  // max positive increase of energy_total
};

ContinuationReport epsilon_continuation(const Mesh& mesh, const Material& mat,
                                        const ScalarField& z, const VectorField& b_values,
                                        const std::vector<double>& epsilons, double theta_z,
                                        const SolveOptions& opts = {});

// Set-defect audit of the region trajectory: per accepted step the area
// of F(t_k) outside the admissible region of the previous accepted
// damage field, with eta-length windows opened after each jump.
struct FinenessReport {
    std::vector<double> step_defects;                // per ledger row from row 1 on
    std::vector<std::pair<double, double>> windows;  // [t_jump, t_jump + eta)
    double max_defect_outside = 0.0;
    double max_defect_inside = 0.0;
    bool passes = false;  // defect 0 outside windows, < eta inside
};

FinenessReport fineness_report(const Mesh& mesh, const RunResult& result, double eta,
                               double theta_z);

// Replays [t_split, T] from the stored state at t_split and compares
// ledger columns and final fields against the unbroken run.
struct RestartReport {
    double max_relative_deviation = 0.0;
    double max_field_deviation = 0.0;
    int rows_compared = 0;
};

RestartReport checkpoint_restart(const Mesh& mesh, const SimulationConfig& cfg,
                                 const RunResult& unbroken, double t_split);

// ============================================================
// File formats
// ============================================================

// Ledger CSV: header then one row per accepted step, columns
// t,E_total,E_grad,E_elastic,diss_inc,work_inc,jump_inc,jump_cum,slack,
// vi_res,eq_res,n_active,event_flag.
void write_ledger(const std::string& path, const std::vector<LedgerRow>& ledger);
std::vector<LedgerRow> read_ledger(const std::string& path);

// Jump log: one "jump,<t>,<n_excluded>,<J_s>,<e_s_plus>" row per event.
void write_jump_log(const std::string& path, const std::vector<JumpEvent>& jumps);

// Snapshot: "t <value>" header then one "id x y z ux uy active" line per
// node.
struct Snapshot {
    double t = 0.0;
    ScalarField z;
    VectorField u;
    std::vector<char> active;
};

void write_snapshot(const std::string& path, const Mesh& mesh, double t, const ScalarField& z,
                    const VectorField& u, const AdmissibleRegion& region);
Snapshot read_snapshot(const std::string& path, const Mesh& mesh);

}  // namespace codam
