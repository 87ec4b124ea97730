#include "codam/energy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace codam {

namespace {

void accumulate_element(const Mesh& mesh, const Material& mat, const VectorField& u,
                        const ScalarField& z, double epsilon, int t, EnergyBreakdown& acc) {
    const auto grad = element_gradient(mesh, z, t);
    const double s2 = grad[0] * grad[0] + grad[1] * grad[1];
    acc.gradient += mesh.area[t] / mat.p * std::pow(s2, 0.5 * mat.p);
    const Sym2 e = element_strain(mesh, u, t);
    acc.elastic += mesh.area[t] * elastic_density(e, element_average(mesh, z, t), epsilon, mat);
}

}  // namespace

EnergyBreakdown free_energy(const Mesh& mesh, const AdmissibleRegion& region, const Material& mat,
                            const VectorField& u, const ScalarField& z, double epsilon) {
    EnergyBreakdown acc;
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        if (region.element_active(t)) accumulate_element(mesh, mat, u, z, epsilon, t, acc);
    }
    return acc;
}

EnergyBreakdown restricted_energy(const Mesh& mesh, const Material& mat, const VectorField& u,
                                  const ScalarField& z, double epsilon,
                                  const std::vector<int>& elements) {
    EnergyBreakdown acc;
    for (int t : elements) accumulate_element(mesh, mat, u, z, epsilon, t, acc);
    return acc;
}

ReducedEnergyResult reduced_energy(const Mesh& mesh, const Material& mat, const ScalarField& z,
                                   const VectorField& b_values, double epsilon, double theta_z,
                                   const SolveOptions& opts) {
    ReducedEnergyResult out;
    out.region = maximal_admissible(mesh, superlevel_region(mesh, z, theta_z));
    if (out.region.num_active == 0) {
        out.u.assign(2 * mesh.num_nodes(), 0.0);
        return out;
    }
    EquilibriumProblem prob;
    prob.mesh = &mesh;
    prob.material = &mat;
    prob.region = &out.region;
    prob.z = &z;
    prob.dirichlet_values = &b_values;
    prob.epsilon = epsilon;
    prob.theta_z = theta_z;
    prob.tol = opts.tol;
    prob.max_iterations = opts.max_iterations;
    EquilibriumSolution sol = solve_equilibrium(prob);
    out.u = std::move(sol.u);
    out.eq_residual = sol.residual;
    out.energy = free_energy(mesh, out.region, mat, out.u, z, epsilon);
    return out;
}

GammaProbeReport gamma_probe(const Mesh& mesh, const Material& mat, const ScalarField& z,
                             const VectorField& b_values, const std::vector<double>& eps_schedule,
                             const std::vector<double>& delta_schedule, double theta_z,
                             const SolveOptions& opts) {
    if (eps_schedule.size() != delta_schedule.size()) {
        throw std::invalid_argument("gamma_probe: schedules must have equal length");
    }
    if (eps_schedule.empty()) {
        throw std::invalid_argument("gamma_probe: schedules must be nonempty");
    }
    for (size_t i = 0; i < eps_schedule.size(); ++i) {
        if (!(eps_schedule[i] > 0.0) || !(delta_schedule[i] > 0.0)) {
            throw std::invalid_argument("gamma_probe: schedules must be strictly positive");
        }
    }

    GammaProbeReport report;
    report.epsilons = eps_schedule;
    report.deltas = delta_schedule;
    for (size_t i = 0; i < eps_schedule.size(); ++i) {
        ScalarField zi(z.size());
        for (size_t n = 0; n < z.size(); ++n) zi[n] = std::max(z[n] - delta_schedule[i], 0.0);
        const ReducedEnergyResult r =
            reduced_energy(mesh, mat, zi, b_values, eps_schedule[i], theta_z, opts);
        report.values.push_back(r.energy.total());
    }
    report.limit_estimate = report.values.back();
    for (size_t i = 0; i + 1 < report.values.size(); ++i) {
        report.monotonicity_defect =
            std::max(report.monotonicity_defect, report.values[i + 1] - report.values[i]);
    }
    report.monotonicity_defect = std::max(report.monotonicity_defect, 0.0);
    return report;
}

JumpEvent jump_energy(const Mesh& mesh, const Material& mat, const VectorField& u_before,
                      const ScalarField& z_before, const AdmissibleRegion& region_before,
                      const ScalarField& z_after, const std::vector<int>& excluded, double t,
                      const VectorField& b_values, double epsilon, double theta_z,
                      const SolveOptions& opts) {
    JumpEvent event;
    event.t = t;
    event.excluded_elements = excluded;
    const double e_before =
        free_energy(mesh, region_before, mat, u_before, z_before, epsilon).total();
    const ReducedEnergyResult after =
        reduced_energy(mesh, mat, z_after, b_values, epsilon, theta_z, opts);
    event.e_s_plus = after.energy.total();
    event.j_s = e_before - event.e_s_plus;
    return event;
}

double dissipation_increment(const Mesh& mesh, const AdmissibleRegion& region, const Material& mat,
                             const ScalarField& z_new, const ScalarField& z_prev, double tau) {
    double acc = 0.0;
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        if (!region.element_active(t)) continue;
        const double dz = element_average(mesh, z_new, t) - element_average(mesh, z_prev, t);
        acc += mesh.area[t] * (mat.alpha * std::abs(dz) + mat.beta * dz * dz / tau);
    }
    return acc;
}

LedgerRow audit_step(const LedgerRow& prev, double t_new, const EnergyBreakdown& e_new,
                     double diss_inc, double work_inc, double jump_inc, double vi_res,
                     double eq_res, int n_active, bool is_jump) {
    LedgerRow row;
    row.t = t_new;
    row.e_total = e_new.total();
    row.e_grad = e_new.gradient;
    row.e_elastic = e_new.elastic;
    row.diss_inc = diss_inc;
    row.work_inc = work_inc;
    row.jump_inc = jump_inc;
    row.jump_cum = prev.jump_cum + jump_inc;
    row.slack = (prev.e_total + work_inc) - (e_new.total() + diss_inc + jump_inc);
    row.vi_res = vi_res;
    row.eq_res = eq_res;
    row.n_active = n_active;
    row.event_flag = is_jump ? 1 : 0;
    return row;
}

}  // namespace codam
