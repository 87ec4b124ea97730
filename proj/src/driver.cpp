#include "codam/driver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "codam/equilibrium.hpp"

namespace codam {

namespace {

std::string fmt_g(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

EquilibriumSolution solve_eq(const Mesh& mesh, const SimulationConfig& cfg,
                             const AdmissibleRegion& region, const ScalarField& z,
                             const VectorField& b) {
    EquilibriumProblem prob;
    prob.mesh = &mesh;
    prob.material = &cfg.material;
    prob.region = &region;
    prob.z = &z;
    prob.dirichlet_values = &b;
    prob.epsilon = cfg.epsilon;
    prob.theta_z = cfg.theta_z;
    prob.tol = cfg.eq_tol;
    prob.max_iterations = cfg.eq_max_iterations;
    return solve_equilibrium(prob);
}

IncrementalDamageProblem damage_problem(const Mesh& mesh, const SimulationConfig& cfg,
                                        const AdmissibleRegion& region, const ScalarField& z_prev,
                                        const VectorField& u, double tau) {
    IncrementalDamageProblem prob;
    prob.mesh = &mesh;
    prob.material = &cfg.material;
    prob.region = &region;
    prob.z_prev = &z_prev;
    prob.u = &u;
    prob.epsilon = cfg.epsilon;
    prob.tau = tau;
    prob.theta_z = cfg.theta_z;
    prob.kkt_tol = cfg.kkt_tol;
    prob.max_iterations = cfg.kkt_max_iterations;
    return prob;
}

struct StepOutcome {
    bool ok = false;
    std::string failure;
    TrajectoryState state;
    LedgerRow row;
    bool has_jump = false;
    JumpEvent jump;
};

StepOutcome attempt_step(const Mesh& mesh, const SimulationConfig& cfg,
                         const TrajectoryState& prev, const LedgerRow& prev_row, double tau) {
    StepOutcome out;
    const double t_new = prev.t + tau;
    const VectorField b_new = sample_boundary(mesh, cfg.bc, t_new);
    const VectorField b_old = sample_boundary(mesh, cfg.bc, prev.t);
    VectorField b_rate(b_new.size());
    for (size_t i = 0; i < b_new.size(); ++i) b_rate[i] = (b_new[i] - b_old[i]) / tau;

    const AdmissibleRegion& region = prev.region;
    const Material& mat = cfg.material;

    // Stagger equilibrium and damage until the VI certificate holds at a
    // consistent pair: after each damage substep the displacement is
    // refreshed, and the step is accepted once the VI residual of z at the
    // refreshed displacement is within kkt_tol.  The damage subproblem is
    // solved below the reporting tolerance because the refresh shifts the
    // gradient and the certificate needs headroom.
    ScalarField z_it = prev.z;
    VectorField u;
    double eq_res = 0.0;
    double vi = std::numeric_limits<double>::infinity();
    bool converged = false;
    int stalled = 0;
    try {
        EquilibriumSolution sol = solve_eq(mesh, cfg, region, z_it, b_new);
        u = std::move(sol.u);
        eq_res = sol.residual;
        for (int outer = 0; outer < cfg.stagger_max_outer; ++outer) {
            IncrementalDamageProblem dp = damage_problem(mesh, cfg, region, prev.z, u, tau);
            dp.kkt_tol = 0.5 * cfg.kkt_tol;
            auto [z_next, report] = solve_damage_step(dp);
            double delta = 0.0;
            for (size_t n = 0; n < z_next.size(); ++n) {
                delta = std::max(delta, std::abs(z_next[n] - z_it[n]));
            }
            z_it = std::move(z_next);
            sol = solve_eq(mesh, cfg, region, z_it, b_new);
            u = std::move(sol.u);
            eq_res = sol.residual;
            vi = vi_residual(damage_problem(mesh, cfg, region, prev.z, u, tau), z_it);
            if (vi <= cfg.kkt_tol) {
                converged = true;
                break;
            }
            // Once the update stops moving while the certificate still
            // fails, further outers repeat the same solves.
            stalled = delta <= cfg.stagger_tol ? stalled + 1 : 0;
            if (stalled >= 3) break;
        }
    } catch (const std::exception& ex) {
        out.failure = ex.what();
        return out;
    }
    if (!converged) {
        out.failure = "stagger: no fixed point within " + std::to_string(cfg.stagger_max_outer) +
                      " outer iterations at t = " + fmt_g(t_new);
        return out;
    }

    const EnergyBreakdown e_pre = free_energy(mesh, region, mat, u, z_it, cfg.epsilon);
    const double diss = dissipation_increment(mesh, region, mat, z_it, prev.z, tau);
    const double work =
        stress_power(mesh, region, mat, u, z_it, b_rate, cfg.epsilon, tau);

    AdmissibleRegion region_new =
        maximal_admissible(mesh, superlevel_region(mesh, z_it, cfg.theta_z));
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        if (region_new.element_active(t) && !region.element_active(t)) {
            throw std::logic_error("run: admissible region grew during a step");
        }
    }
    const std::vector<int> excluded = detect_jump(region, region_new);

    EnergyBreakdown e_new = e_pre;
    ScalarField z_acc;
    VectorField u_acc;
    const bool region_changed = region_new.num_active != region.num_active;
    if (region_changed) {
        z_acc = truncate_field(z_it, region_new);
        SolveOptions opts{cfg.eq_tol, cfg.eq_max_iterations};
        ReducedEnergyResult red;
        try {
            red = reduced_energy(mesh, mat, z_acc, b_new, cfg.epsilon, cfg.theta_z, opts);
        } catch (const std::exception& ex) {
            out.failure = ex.what();
            return out;
        }
        e_new = red.energy;
        u_acc = std::move(red.u);
        eq_res = red.eq_residual;
        region_new = std::move(red.region);
    } else {
        z_acc = std::move(z_it);
        u_acc = std::move(u);
    }

    double jump_inc = 0.0;
    out.has_jump = !excluded.empty();
    if (out.has_jump) {
        jump_inc = e_pre.total() - e_new.total();
        out.jump.t = t_new;
        out.jump.excluded_elements = excluded;
        out.jump.j_s = jump_inc;
        out.jump.e_s_plus = e_new.total();
    }

    out.row = audit_step(prev_row, t_new, e_new, diss, work, jump_inc, vi, eq_res,
                         region_new.num_active, out.has_jump);
    const double threshold =
        -cfg.audit_tol * (1.0 + std::min(prev_row.e_total, prev.e_ref));
    if (out.row.slack < threshold) {
        out.failure = "audit: slack " + fmt_g(out.row.slack) + " below " + fmt_g(threshold) +
                      " at t = " + fmt_g(t_new);
        return out;
    }

    out.state.t = t_new;
    out.state.z = std::move(z_acc);
    out.state.u = std::move(u_acc);
    out.state.region = std::move(region_new);
    out.state.epsilon_used = cfg.epsilon;
    out.state.e_ref = prev.e_ref;
    out.ok = true;
    return out;
}

}  // namespace

RunResult run_from(const Mesh& mesh, const SimulationConfig& cfg, const TrajectoryState& initial,
                   const LedgerRow& initial_row) {
    RunResult res;
    res.ledger.push_back(initial_row);
    res.states.push_back(initial);

    double tau = initial.tau_next > 0.0 ? initial.tau_next : cfg.tau;
    int streak = initial.clean_streak;
    const double t_end = cfg.T;
    const double t_eps = 1e-12 * std::max(1.0, t_end);

    while (res.states.back().t < t_end - t_eps) {
        const TrajectoryState& prev = res.states.back();
        const double tau_step = std::min(tau, t_end - prev.t);
        StepOutcome outcome = attempt_step(mesh, cfg, prev, res.ledger.back(), tau_step);
        if (!outcome.ok) {
            tau = 0.5 * tau_step;
            streak = 0;
            if (tau < cfg.tau_min) {
                throw std::runtime_error("run: step size " + fmt_g(tau) + " fell below tau_min at t = " +
                                         fmt_g(prev.t) + "; last failure: " + outcome.failure);
            }
            continue;
        }
        ++streak;
        if (streak >= 5) {
            tau = std::min(tau * 1.25, cfg.tau);
            streak = 0;
        }
        outcome.state.tau_next = tau;
        outcome.state.clean_streak = streak;
        res.ledger.push_back(outcome.row);
        res.states.push_back(std::move(outcome.state));
        if (outcome.has_jump) res.jumps.push_back(std::move(outcome.jump));
    }
    return res;
}

RunResult run(const Mesh& mesh, const SimulationConfig& cfg) {
    ScalarField z0 = initial_damage(mesh, cfg);
    for (size_t n = 0; n < z0.size(); ++n) {
        if (z0[n] < 0.0 || z0[n] > 1.0) {
            throw std::runtime_error("run: initial damage at node " + std::to_string(n) +
                                     " is outside [0, 1]");
        }
    }

    AdmissibleRegion region0 = maximal_admissible(mesh, superlevel_region(mesh, z0, cfg.theta_z));
    if (region0.num_active == 0) {
        throw std::runtime_error("run: the initial damage field has an empty admissible region");
    }
    z0 = truncate_field(z0, region0);

    const VectorField b0 = sample_boundary(mesh, cfg.bc, 0.0);
    SolveOptions opts{cfg.eq_tol, cfg.eq_max_iterations};
    ReducedEnergyResult red = reduced_energy(mesh, cfg.material, z0, b0, cfg.epsilon,
                                             cfg.theta_z, opts);

    TrajectoryState state0;
    state0.t = 0.0;
    state0.z = z0;
    state0.u = red.u;
    state0.region = std::move(red.region);
    state0.epsilon_used = cfg.epsilon;
    state0.tau_next = cfg.tau;
    state0.clean_streak = 0;
    state0.e_ref = red.energy.total();

    LedgerRow row0;
    row0.t = 0.0;
    row0.e_total = red.energy.total();
    row0.e_grad = red.energy.gradient;
    row0.e_elastic = red.energy.elastic;
    row0.vi_res =
        vi_residual(damage_problem(mesh, cfg, state0.region, state0.z, state0.u, cfg.tau),
                    state0.z);
    row0.eq_res = red.eq_residual;
    row0.n_active = state0.region.num_active;

    return run_from(mesh, cfg, state0, row0);
}

ContinuationReport epsilon_continuation(const Mesh& mesh, const Material& mat,
                                        const ScalarField& z, const VectorField& b_values,
                                        const std::vector<double>& epsilons, double theta_z,
                                        const SolveOptions& opts) {
    if (epsilons.empty()) {
        throw std::invalid_argument("continuation: empty epsilon schedule");
    }
    for (size_t i = 0; i < epsilons.size(); ++i) {
        if (!(epsilons[i] > 0.0)) {
            throw std::invalid_argument("continuation: epsilons must be positive");
        }
        if (i > 0 && !(epsilons[i] < epsilons[i - 1])) {
            throw std::invalid_argument("continuation: epsilons must be strictly decreasing");
        }
    }

    const AdmissibleRegion whole = whole_mesh_region(mesh);
    ContinuationReport report;
    for (const double eps : epsilons) {
        EquilibriumProblem prob;
        prob.mesh = &mesh;
        prob.material = &mat;
        prob.region = &whole;
        prob.z = &z;
        prob.dirichlet_values = &b_values;
        prob.epsilon = eps;
        prob.theta_z = theta_z;
        prob.tol = opts.tol;
        prob.max_iterations = opts.max_iterations;
        const EquilibriumSolution sol = solve_equilibrium(prob);

        ContinuationRow row;
        row.epsilon = eps;
        row.eq_residual = sol.residual;
        row.energy_total = free_energy(mesh, whole, mat, sol.u, z, eps).total();
        double strain2 = 0.0;
        for (int t = 0; t < mesh.num_triangles(); ++t) {
            const auto& tri = mesh.triangles[t];
            const double zmin = std::min({z[tri[0]], z[tri[1]], z[tri[2]]});
            const double zmax = std::max({z[tri[0]], z[tri[1]], z[tri[2]]});
            const Sym2 e = element_strain(mesh, sol.u, t);
            if (zmax <= theta_z) {
                row.elastic_dead +=
                    mesh.area[t] * elastic_density(e, element_average(mesh, z, t), eps, mat);
            }
            if (zmin > theta_z) {
                strain2 += mesh.area[t] * ddot(e, e);
            }
        }
        row.strain_norm_live = std::sqrt(strain2);
        report.rows.push_back(row);
    }

    double vmin = std::numeric_limits<double>::infinity();
    double vmax = 0.0;
    for (size_t i = 0; i < report.rows.size(); ++i) {
        vmin = std::min(vmin, report.rows[i].strain_norm_live);
        vmax = std::max(vmax, report.rows[i].strain_norm_live);
        if (i > 0) {
            report.monotonicity_defect =
                std::max(report.monotonicity_defect,
                         report.rows[i].energy_total - report.rows[i - 1].energy_total);
        }
    }
    report.monotonicity_defect = std::max(report.monotonicity_defect, 0.0);
    report.strain_ratio = vmin > 0.0  ? vmax / vmin
                          : vmax == 0.0 ? 1.0
                                        : std::numeric_limits<double>::infinity();
    return report;
}

FinenessReport fineness_report(const Mesh& mesh, const RunResult& result, double eta,
                               double theta_z) {
    FinenessReport report;
    for (const JumpEvent& j : result.jumps) report.windows.emplace_back(j.t, j.t + eta);

    for (size_t k = 1; k < result.states.size(); ++k) {
        const AdmissibleRegion expected = maximal_admissible(
            mesh, superlevel_region(mesh, result.states[k - 1].z, theta_z));
        double defect = 0.0;
        for (int t = 0; t < mesh.num_triangles(); ++t) {
            if (result.states[k].region.element_active(t) && !expected.element_active(t)) {
                defect += mesh.area[t];
            }
        }
        report.step_defects.push_back(defect);
        const double tk = result.states[k].t;
        bool inside = false;
        for (const auto& [a, b] : report.windows) {
            if (tk >= a && tk < b) {
                inside = true;
                break;
            }
        }
        if (inside) {
            report.max_defect_inside = std::max(report.max_defect_inside, defect);
        } else {
            report.max_defect_outside = std::max(report.max_defect_outside, defect);
        }
    }
    report.passes = report.max_defect_outside == 0.0 && report.max_defect_inside < eta;
    return report;
}

RestartReport checkpoint_restart(const Mesh& mesh, const SimulationConfig& cfg,
                                 const RunResult& unbroken, double t_split) {
    size_t split = 0;
    double best = std::numeric_limits<double>::infinity();
    for (size_t k = 0; k < unbroken.ledger.size(); ++k) {
        const double d = std::abs(unbroken.ledger[k].t - t_split);
        if (d < best) {
            best = d;
            split = k;
        }
    }

    const RunResult replay =
        run_from(mesh, cfg, unbroken.states[split], unbroken.ledger[split]);

    RestartReport report;
    auto column = [&](double a, double b) {
        report.max_relative_deviation =
            std::max(report.max_relative_deviation, std::abs(a - b) / (1.0 + std::abs(b)));
    };
    const size_t n = std::min(replay.ledger.size(), unbroken.ledger.size() - split);
    if (replay.ledger.size() != unbroken.ledger.size() - split) {
        report.max_relative_deviation = std::numeric_limits<double>::infinity();
    }
    for (size_t i = 0; i < n; ++i) {
        const LedgerRow& a = replay.ledger[i];
        const LedgerRow& b = unbroken.ledger[split + i];
        column(a.t, b.t);
        column(a.e_total, b.e_total);
        column(a.e_grad, b.e_grad);
        column(a.e_elastic, b.e_elastic);
        column(a.diss_inc, b.diss_inc);
        column(a.work_inc, b.work_inc);
        column(a.jump_inc, b.jump_inc);
        column(a.jump_cum, b.jump_cum);
        column(a.slack, b.slack);
        column(a.vi_res, b.vi_res);
        column(a.eq_res, b.eq_res);
        column(a.n_active, b.n_active);
        column(a.event_flag, b.event_flag);
        ++report.rows_compared;
    }
    if (!replay.states.empty() && !unbroken.states.empty()) {
        const TrajectoryState& a = replay.states.back();
        const TrajectoryState& b = unbroken.states.back();
        for (size_t i = 0; i < a.z.size(); ++i) {
            report.max_field_deviation =
                std::max(report.max_field_deviation, std::abs(a.z[i] - b.z[i]));
        }
        for (size_t i = 0; i < a.u.size(); ++i) {
            report.max_field_deviation =
                std::max(report.max_field_deviation, std::abs(a.u[i] - b.u[i]));
        }
    }
    return report;
}

// ============================================================
// File formats
// ============================================================

namespace {
const char* kLedgerHeader =
    "t,E_total,E_grad,E_elastic,diss_inc,work_inc,jump_inc,jump_cum,slack,vi_res,eq_res,"
    "n_active,event_flag";
}

void write_ledger(const std::string& path, const std::vector<LedgerRow>& ledger) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("ledger: cannot open '" + path + "' for writing");
    out << kLedgerHeader << "\n";
    for (const LedgerRow& r : ledger) {
        out << fmt_g(r.t) << ',' << fmt_g(r.e_total) << ',' << fmt_g(r.e_grad) << ','
            << fmt_g(r.e_elastic) << ',' << fmt_g(r.diss_inc) << ',' << fmt_g(r.work_inc) << ','
            << fmt_g(r.jump_inc) << ',' << fmt_g(r.jump_cum) << ',' << fmt_g(r.slack) << ','
            << fmt_g(r.vi_res) << ',' << fmt_g(r.eq_res) << ',' << r.n_active << ','
            << r.event_flag << "\n";
    }
}

std::vector<LedgerRow> read_ledger(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("ledger: cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line) || line != kLedgerHeader) {
        throw std::runtime_error("ledger: '" + path + "' has an unexpected header");
    }
    std::vector<LedgerRow> rows;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (line.rfind("jump,", 0) == 0) continue;
        std::istringstream ss(line);
        LedgerRow r;
        char c;
        if (!(ss >> r.t >> c >> r.e_total >> c >> r.e_grad >> c >> r.e_elastic >> c >>
              r.diss_inc >> c >> r.work_inc >> c >> r.jump_inc >> c >> r.jump_cum >> c >>
              r.slack >> c >> r.vi_res >> c >> r.eq_res >> c >> r.n_active >> c >>
              r.event_flag)) {
            throw std::runtime_error("ledger: " + path + ":" + std::to_string(lineno) +
                                     ": malformed row");
        }
        rows.push_back(r);
    }
    return rows;
}

void write_jump_log(const std::string& path, const std::vector<JumpEvent>& jumps) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("jump log: cannot open '" + path + "' for writing");
    for (const JumpEvent& j : jumps) {
        out << "jump," << fmt_g(j.t) << ',' << j.excluded_elements.size() << ',' << fmt_g(j.j_s)
            << ',' << fmt_g(j.e_s_plus) << "\n";
    }
}

void write_snapshot(const std::string& path, const Mesh& mesh, double t, const ScalarField& z,
                    const VectorField& u, const AdmissibleRegion& region) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("snapshot: cannot open '" + path + "' for writing");
    out << "t " << fmt_g(t) << "\n";
    for (int n = 0; n < mesh.num_nodes(); ++n) {
        out << n << ' ' << fmt_g(mesh.nodes[n][0]) << ' ' << fmt_g(mesh.nodes[n][1]) << ' '
            << fmt_g(z[n]) << ' ' << fmt_g(u[2 * n]) << ' ' << fmt_g(u[2 * n + 1]) << ' '
            << (region.node_active(n) ? 1 : 0) << "\n";
    }
}

Snapshot read_snapshot(const std::string& path, const Mesh& mesh) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("snapshot: cannot open '" + path + "'");
    std::string word;
    Snapshot snap;
    if (!(in >> word >> snap.t) || word != "t") {
        throw std::runtime_error("snapshot: '" + path + "' is missing the 't <value>' header");
    }
    snap.z.assign(mesh.num_nodes(), 0.0);
    snap.u.assign(2 * mesh.num_nodes(), 0.0);
    snap.active.assign(mesh.num_nodes(), 0);
    for (int n = 0; n < mesh.num_nodes(); ++n) {
        int id, active;
        double x, y, z, ux, uy;
        if (!(in >> id >> x >> y >> z >> ux >> uy >> active) || id != n) {
            throw std::runtime_error("snapshot: '" + path + "' is malformed at node " +
                                     std::to_string(n));
        }
        if (std::abs(x - mesh.nodes[n][0]) > 1e-9 * (1.0 + std::abs(x)) ||
            std::abs(y - mesh.nodes[n][1]) > 1e-9 * (1.0 + std::abs(y))) {
            throw std::runtime_error("snapshot: node " + std::to_string(n) +
                                     " coordinates do not match the mesh");
        }
        snap.z[n] = z;
        snap.u[2 * n] = ux;
        snap.u[2 * n + 1] = uy;
        snap.active[n] = static_cast<char>(active);
    }
    return snap;
}

}  // namespace codam
