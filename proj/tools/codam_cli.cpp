#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "codam/driver.hpp"

namespace {

using namespace codam;

std::string snapshot_path(const std::string& dir, size_t step) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "step_%06zu.txt", step);
    return dir + "/snapshots/" + buf;
}

int cmd_run(const SimulationConfig& cfg) {
    const Mesh mesh = load_mesh(cfg.mesh_path);
    const RunResult result = run(mesh, cfg);

    std::filesystem::create_directories(cfg.output_dir + "/snapshots");
    write_ledger(cfg.output_dir + "/ledger.csv", result.ledger);
    write_jump_log(cfg.output_dir + "/jumps.csv", result.jumps);
    const int every = cfg.snapshot_every > 0 ? cfg.snapshot_every : 1;
    for (size_t k = 0; k < result.states.size(); ++k) {
        if (k % static_cast<size_t>(every) != 0 && k + 1 != result.states.size()) continue;
        const TrajectoryState& s = result.states[k];
        write_snapshot(snapshot_path(cfg.output_dir, k), mesh, s.t, s.z, s.u, s.region);
    }

    const LedgerRow& last = result.ledger.back();
    std::printf("run: %zu accepted steps, %zu jump events, final t = %.6g\n",
                result.ledger.size() - 1, result.jumps.size(), last.t);
    std::printf("run: final energy %.17g (gradient %.17g, elastic %.17g)\n", last.e_total,
                last.e_grad, last.e_elastic);
    std::printf("run: cumulative jump energy %.17g, active elements %d\n", last.jump_cum,
                last.n_active);

    const FinenessReport fineness = fineness_report(mesh, result, cfg.eta_fineness, cfg.theta_z);
    std::printf("run: set defect %.3g outside jump windows, %.3g inside (%s)\n",
                fineness.max_defect_outside, fineness.max_defect_inside,
                fineness.passes ? "pass" : "fail");
    std::printf("run: outputs in %s\n", cfg.output_dir.c_str());
    return 0;
}

int cmd_probe_gamma(const SimulationConfig& cfg, const std::string& state_path) {
    if (cfg.gamma_epsilons.empty()) {
        throw std::runtime_error("probe-gamma: config sets no gamma.epsilons schedule");
    }
    const Mesh mesh = load_mesh(cfg.mesh_path);
    const Snapshot snap = read_snapshot(state_path, mesh);
    const VectorField b = sample_boundary(mesh, cfg.bc, snap.t);
    SolveOptions opts{cfg.eq_tol, cfg.eq_max_iterations};
    const GammaProbeReport report = gamma_probe(mesh, cfg.material, snap.z, b, cfg.gamma_epsilons,
                                                cfg.gamma_deltas, cfg.theta_z, opts);
    std::printf("%-14s %-14s %-22s\n", "epsilon", "delta", "reduced_energy");
    for (size_t i = 0; i < report.values.size(); ++i) {
        std::printf("%-14.6g %-14.6g %-22.17g\n", report.epsilons[i], report.deltas[i],
                    report.values[i]);
    }
    std::printf("limit estimate %.17g, monotonicity defect %.3g\n", report.limit_estimate,
                report.monotonicity_defect);
    return 0;
}

int cmd_continuation(const SimulationConfig& cfg, const std::string& state_path) {
    if (cfg.continuation_epsilons.empty()) {
        throw std::runtime_error("continuation: config sets no continuation.epsilons schedule");
    }
    const Mesh mesh = load_mesh(cfg.mesh_path);
    const Snapshot snap = read_snapshot(state_path, mesh);
    const VectorField b = sample_boundary(mesh, cfg.bc, snap.t);
    SolveOptions opts{cfg.eq_tol, cfg.eq_max_iterations};
    const ContinuationReport report = epsilon_continuation(
        mesh, cfg.material, snap.z, b, cfg.continuation_epsilons, cfg.theta_z, opts);
    std::printf("%-12s %-22s %-16s %-16s %-10s\n", "epsilon", "energy", "elastic_dead",
                "strain_live", "eq_res");
    for (const ContinuationRow& r : report.rows) {
        std::printf("%-12.6g %-22.17g %-16.8g %-16.8g %-10.3g\n", r.epsilon, r.energy_total,
                    r.elastic_dead, r.strain_norm_live, r.eq_residual);
    }
    std::printf("strain ratio %.6g, monotonicity defect %.3g\n", report.strain_ratio,
                report.monotonicity_defect);
    return 0;
}

int cmd_verify(const std::string& ledger_path) {
    const std::vector<LedgerRow> rows = read_ledger(ledger_path);
    if (rows.empty()) {
        std::printf("verify: %s has no rows\n", ledger_path.c_str());
        return 1;
    }
    int failures = 0;
    auto check = [&](bool ok, const std::string& what) {
        if (!ok) {
            ++failures;
            std::printf("verify: FAIL %s\n", what.c_str());
        }
    };
    double jump_cum = rows[0].jump_cum;
    for (size_t i = 0; i < rows.size(); ++i) {
        const LedgerRow& r = rows[i];
        const std::string at = "row " + std::to_string(i) + " (t = " + std::to_string(r.t) + ")";
        check(std::abs(r.e_total - (r.e_grad + r.e_elastic)) <= 1e-9 * (1.0 + std::abs(r.e_total)),
              at + ": E_total != E_grad + E_elastic");
        check(r.event_flag == 0 || r.event_flag == 1, at + ": event_flag outside {0,1}");
        check((r.event_flag == 1) == (r.jump_inc != 0.0) || r.event_flag == 1,
              at + ": jump_inc nonzero without event_flag");
        if (i > 0) {
            const LedgerRow& p = rows[i - 1];
            check(r.t > p.t, at + ": time not increasing");
            jump_cum += r.jump_inc;
            check(std::abs(r.jump_cum - jump_cum) <= 1e-9 * (1.0 + std::abs(jump_cum)),
                  at + ": jump_cum does not accumulate jump_inc");
            const double slack =
                (p.e_total + r.work_inc) - (r.e_total + r.diss_inc + r.jump_inc);
            check(std::abs(r.slack - slack) <= 1e-9 * (1.0 + std::abs(slack)),
                  at + ": slack does not match its columns");
            check(r.n_active <= p.n_active, at + ": active element count grew");
        }
    }
    if (failures == 0) {
        std::printf("verify: OK (%zu rows)\n", rows.size());
        return 0;
    }
    std::printf("verify: %d failed checks\n", failures);
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"quasi-static complete damage simulator"};
    app.require_subcommand(1);

    std::string config_path, state_path, ledger_path, output_override;
    int threads = 0;
    app.add_option("--threads", threads, "worker thread count")->check(CLI::PositiveNumber);

    CLI::App* run_cmd = app.add_subcommand("run", "run the evolution described by a config");
    run_cmd->add_option("--config", config_path, "config file")->required();
    run_cmd->add_option("--output", output_override, "override the configured output directory");

    CLI::App* gamma_cmd =
        app.add_subcommand("probe-gamma", "reduced energies along the (epsilon, delta) schedule");
    gamma_cmd->add_option("--config", config_path, "config file")->required();
    gamma_cmd->add_option("--state", state_path, "snapshot file with the damage field")
        ->required();

    CLI::App* cont_cmd =
        app.add_subcommand("continuation", "whole-mesh regularized solves along epsilons");
    cont_cmd->add_option("--config", config_path, "config file")->required();
    cont_cmd->add_option("--state", state_path, "snapshot file with the damage field")
        ->required();

    CLI::App* verify_cmd = app.add_subcommand("verify", "recheck a ledger's internal accounting");
    verify_cmd->add_option("--ledger", ledger_path, "ledger CSV")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (verify_cmd->parsed()) return cmd_verify(ledger_path);
        SimulationConfig cfg = codam::parse_config(config_path);
        if (!output_override.empty()) cfg.output_dir = output_override;
        if (threads > 0) cfg.threads = threads;
        if (run_cmd->parsed()) return cmd_run(cfg);
        if (gamma_cmd->parsed()) return cmd_probe_gamma(cfg, state_path);
        if (cont_cmd->parsed()) return cmd_continuation(cfg, state_path);
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 1;
    }
    return 0;
}
