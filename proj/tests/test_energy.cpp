#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "codam/energy.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace codam;
using namespace testsupport;

namespace {

VectorField stretch_x(const Mesh& mesh, double s) {
    VectorField u(2 * mesh.num_nodes(), 0.0);
    for (int n = 0; n < mesh.num_nodes(); ++n) u[2 * n] = s * mesh.nodes[n][0];
    return u;
}

// Nonzero on the left Dirichlet wall, where stretch_x vanishes.
VectorField stretch_wall(const Mesh& mesh, double s) {
    VectorField u(2 * mesh.num_nodes(), 0.0);
    for (int n = 0; n < mesh.num_nodes(); ++n) u[2 * n + 1] = s * mesh.nodes[n][1];
    return u;
}

ScalarField coordinate_x(const Mesh& mesh) {
    ScalarField z(mesh.num_nodes());
    for (int n = 0; n < mesh.num_nodes(); ++n) z[n] = mesh.nodes[n][0];
    return z;
}

}  // namespace

TEST_CASE("gradient energy of a unit slope") {
    const Mesh mesh = make_grid(1, 1).build();  // unit square, two triangles
    const AdmissibleRegion region = whole_mesh_region(mesh);
    const ScalarField z = coordinate_x(mesh);  // grad z = (1, 0) everywhere
    const VectorField u(2 * mesh.num_nodes(), 0.0);

    Material mat;
    mat.p = 4.0;
    CHECK(free_energy(mesh, region, mat, u, z, 0.0).gradient == doctest::Approx(0.25));
    mat.p = 3.0;
    CHECK(free_energy(mesh, region, mat, u, z, 0.0).gradient == doctest::Approx(1.0 / 3.0));
    CHECK(free_energy(mesh, region, mat, u, z, 0.0).elastic == 0.0);
}

TEST_CASE("elastic energy of a uniform strain") {
    const Mesh mesh = make_grid(2, 2).build();  // unit area
    const AdmissibleRegion region = whole_mesh_region(mesh);
    Material mat;
    mat.lambda = 2.0;
    mat.mu = 0.5;
    const ScalarField z(mesh.num_nodes(), 1.0);

    // Strain A = (1, 2, 0.5): C A : A = 2 * 9 + 1 * 5.5 = 23.5.
    VectorField u(2 * mesh.num_nodes());
    for (int n = 0; n < mesh.num_nodes(); ++n) {
        const double x = mesh.nodes[n][0], y = mesh.nodes[n][1];
        u[2 * n] = x + 0.5 * y;
        u[2 * n + 1] = 0.5 * x + 2.0 * y;
    }
    const EnergyBreakdown e = free_energy(mesh, region, mat, u, z, 0.0);
    CHECK(e.elastic == doctest::Approx(11.75).epsilon(1e-13));
    CHECK(e.gradient == 0.0);
}

TEST_CASE("restricted energy sums to the free energy over the active set") {
    std::mt19937_64 rng(31);
    const Mesh mesh = make_jittered_grid(3, 2, 0.2, rng).build();
    const AdmissibleRegion region = whole_mesh_region(mesh);
    Material mat;
    const ScalarField z = random_field(mesh.num_nodes(), 0.2, 1.0, rng);
    const VectorField u = stretch_x(mesh, 0.2);

    std::vector<int> all, first_half, second_half;
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        all.push_back(t);
        (t < mesh.num_triangles() / 2 ? first_half : second_half).push_back(t);
    }
    const double whole = free_energy(mesh, region, mat, u, z, 0.0).total();
    CHECK(restricted_energy(mesh, mat, u, z, 0.0, all).total() == doctest::Approx(whole));
    CHECK(restricted_energy(mesh, mat, u, z, 0.0, first_half).total() +
              restricted_energy(mesh, mat, u, z, 0.0, second_half).total() ==
          doctest::Approx(whole));
}

TEST_CASE("dissipation increment closed form") {
    const Mesh mesh = make_grid(2, 2).build();  // unit area
    const AdmissibleRegion region = whole_mesh_region(mesh);
    Material mat;
    mat.alpha = 0.2;
    mat.beta = 0.5;
    const ScalarField z_prev(mesh.num_nodes(), 1.0);
    const ScalarField z_new(mesh.num_nodes(), 0.9);

    // alpha |dz| + beta dz^2 / tau = 0.2 * 0.1 + 0.5 * 0.01 / 0.1 = 0.07.
    CHECK(dissipation_increment(mesh, region, mat, z_new, z_prev, 0.1) ==
          doctest::Approx(0.07).epsilon(1e-13));
}

TEST_CASE("reduced energy of an intact state matches the equilibrium solve") {
    std::mt19937_64 rng(5);
    const Mesh mesh = make_jittered_grid(4, 3, 0.2, rng).build();
    const ScalarField z(mesh.num_nodes(), 1.0);
    Material mat;
    const VectorField b = stretch_wall(mesh, 0.2);

    const ReducedEnergyResult red = reduced_energy(mesh, mat, z, b, 0.0, 1e-8);
    CHECK(red.region.num_active == mesh.num_triangles());

    EquilibriumProblem prob;
    prob.mesh = &mesh;
    prob.material = &mat;
    prob.region = &red.region;
    prob.z = &z;
    prob.dirichlet_values = &b;
    const EquilibriumSolution sol = solve_equilibrium(prob);
    CHECK(max_abs_diff(red.u, sol.u) == 0.0);
    CHECK(red.energy.total() ==
          doctest::Approx(free_energy(mesh, red.region, mat, sol.u, z, 0.0).total()));
}

TEST_CASE("reduced energy of a fully dead state is zero") {
    const Mesh mesh = make_grid(2, 2).build();
    Material mat;
    const ScalarField z(mesh.num_nodes(), 0.0);
    const VectorField b = stretch_x(mesh, 0.1);

    const ReducedEnergyResult red = reduced_energy(mesh, mat, z, b, 0.0, 1e-8);
    CHECK(red.region.num_active == 0);
    CHECK(red.energy.total() == 0.0);
    for (double v : red.u) CHECK(v == 0.0);
}

TEST_CASE("reduced energy is nonincreasing as epsilon decreases") {
    std::mt19937_64 rng(17);
    const Mesh mesh = make_jittered_grid(4, 4, 0.2, rng).build();
    Material mat;
    const ScalarField z = random_field(mesh.num_nodes(), 0.3, 1.0, rng);
    const VectorField b = stretch_wall(mesh, 0.2);

    double prev = -1.0;
    bool first = true;
    for (double eps : {1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 0.0}) {
        const double value = reduced_energy(mesh, mat, z, b, eps, 1e-8).energy.total();
        if (!first) CHECK(value <= prev + 1e-12);
        prev = value;
        first = false;
    }
}

TEST_CASE("gamma probe validates its schedules") {
    const Mesh mesh = make_grid(2, 1).build();
    Material mat;
    const ScalarField z(mesh.num_nodes(), 1.0);
    const VectorField b = stretch_wall(mesh, 0.2);

    CHECK_THROWS_AS(gamma_probe(mesh, mat, z, b, {1e-2}, {1e-2, 1e-3}, 1e-8),
                    std::invalid_argument);
    CHECK_THROWS_AS(gamma_probe(mesh, mat, z, b, {}, {}, 1e-8), std::invalid_argument);
    CHECK_THROWS_AS(gamma_probe(mesh, mat, z, b, {1e-2, 0.0}, {1e-2, 1e-3}, 1e-8),
                    std::invalid_argument);
    CHECK_THROWS_AS(gamma_probe(mesh, mat, z, b, {1e-2, -1e-3}, {1e-2, 1e-3}, 1e-8),
                    std::invalid_argument);
}

TEST_CASE("gamma probe reports its values and defect consistently") {
    const Mesh mesh = make_grid(3, 2).build();
    Material mat;
    const ScalarField z(mesh.num_nodes(), 1.0);
    const VectorField b = stretch_wall(mesh, 0.2);
    const std::vector<double> eps = {1e-2, 1e-3, 1e-4};
    const std::vector<double> del = {1e-2, 1e-3, 1e-4};

    const GammaProbeReport report = gamma_probe(mesh, mat, z, b, eps, del, 1e-8);
    REQUIRE(report.values.size() == 3);
    CHECK(report.limit_estimate == report.values.back());
    double defect = 0.0;
    for (size_t i = 0; i + 1 < report.values.size(); ++i) {
        defect = std::max(defect, report.values[i + 1] - report.values[i]);
    }
    CHECK(report.monotonicity_defect == std::max(defect, 0.0));

    // Shrinking delta and epsilon should approach the clean value from
    // above on this intact fixture.
    const double clean = reduced_energy(mesh, mat, z, b, 0.0, 1e-8).energy.total();
    CHECK(report.limit_estimate == doctest::Approx(clean).epsilon(1e-2));
    CHECK(report.monotonicity_defect <= 1e-10);
}

TEST_CASE("jump energy splits the pre-truncation energy exactly") {
    // Strip of four cells clamped on the left; killing the seam between
    // cells 1 and 2 exhausts the middle and strands cell 3.
    const Mesh mesh = make_grid(4, 1).build();
    Material mat;
    const ScalarField z_before(mesh.num_nodes(), 1.0);
    const AdmissibleRegion before = whole_mesh_region(mesh);
    const VectorField b = stretch_wall(mesh, 0.2);

    EquilibriumProblem prob;
    prob.mesh = &mesh;
    prob.material = &mat;
    prob.region = &before;
    prob.z = &z_before;
    prob.dirichlet_values = &b;
    const VectorField u_before = solve_equilibrium(prob).u;

    ScalarField z_after = z_before;
    z_after[2] = 0.0;  // bottom seam node
    z_after[7] = 0.0;  // top seam node
    const AdmissibleRegion after = maximal_admissible(mesh, superlevel_region(mesh, z_after, 1e-8));
    const std::vector<int> excluded = detect_jump(before, after);
    CHECK(excluded == std::vector<int>{6, 7});

    const JumpEvent event =
        jump_energy(mesh, mat, u_before, z_before, before, z_after, excluded, 0.5, b, 0.0, 1e-8);
    CHECK(event.t == 0.5);
    CHECK(event.excluded_elements == excluded);

    const double e_before = free_energy(mesh, before, mat, u_before, z_before, 0.0).total();
    const double e_after = reduced_energy(mesh, mat, z_after, b, 0.0, 1e-8).energy.total();
    CHECK(event.e_s_plus == e_after);
    CHECK(event.j_s == e_before - e_after);
    CHECK(event.j_s > 0.0);
    CHECK(event.e_s_plus > 0.0);
}

TEST_CASE("audit rows balance stored energy, work, dissipation and jumps") {
    LedgerRow prev;
    prev.t = 0.4;
    prev.e_total = 2.0;
    prev.e_grad = 1.2;
    prev.e_elastic = 0.8;
    prev.jump_cum = 0.5;

    EnergyBreakdown e_new;
    e_new.gradient = 0.4;
    e_new.elastic = 0.8;

    const LedgerRow row = audit_step(prev, 0.5, e_new, 0.3, 0.1, 0.2, 1e-9, 1e-11, 40, true);
    CHECK(row.t == 0.5);
    CHECK(row.e_total == doctest::Approx(1.2));
    CHECK(row.slack == doctest::Approx(0.4));  // (2.0 + 0.1) - (1.2 + 0.3 + 0.2)
    CHECK(row.jump_cum == doctest::Approx(0.7));
    CHECK(row.event_flag == 1);
    CHECK(row.n_active == 40);
    CHECK(row.vi_res == 1e-9);
    CHECK(row.eq_res == 1e-11);

    const LedgerRow quiet = audit_step(prev, 0.5, e_new, 0.3, 0.1, 0.0, 0.0, 0.0, 40, false);
    CHECK(quiet.event_flag == 0);
    CHECK(quiet.jump_cum == 0.5);
}
