#include "codam/equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace codam {

void SparseMatrix::multiply(const std::vector<double>& x, std::vector<double>& y) const {
    y.assign(n, 0.0);
    for (int r = 0; r < n; ++r) {
        double acc = 0.0;
        for (int k = row_ptr[r]; k < row_ptr[r + 1]; ++k) acc += val[k] * x[col[k]];
        y[r] = acc;
    }
}

namespace {

// 6x6 element stiffness for P1 plane elasticity: factor * |K| B^T D B with
// Voigt strain (exx, eyy, 2 exy) and D the isotropic constitutive matrix.
void element_stiffness(const Mesh& mesh, int t, double lambda, double mu, double factor,
                       double ke[6][6]) {
    const auto& g = mesh.hat_grad[t];
    // B rows: exx, eyy, 2exy; columns: (u0x u0y u1x u1y u2x u2y).
    double B[3][6] = {};
    for (int k = 0; k < 3; ++k) {
        const double gx = g[2 * k];
        const double gy = g[2 * k + 1];
        B[0][2 * k] = gx;
        B[1][2 * k + 1] = gy;
        B[2][2 * k] = gy;
        B[2][2 * k + 1] = gx;
    }
    const double d00 = lambda + 2.0 * mu;
    const double a = factor * mesh.area[t];
    for (int i = 0; i < 6; ++i) {
        const double dbi0 = d00 * B[0][i] + lambda * B[1][i];
        const double dbi1 = lambda * B[0][i] + d00 * B[1][i];
        const double dbi2 = mu * B[2][i];
        for (int j = 0; j < 6; ++j) {
            ke[i][j] = a * (dbi0 * B[0][j] + dbi1 * B[1][j] + dbi2 * B[2][j]);
        }
    }
}

struct Triplet {
    int row;
    int col;
    double val;
};

SparseMatrix csr_from_triplets(int n, std::vector<Triplet>& triplets) {
    std::sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
        return a.row != b.row ? a.row < b.row : a.col < b.col;
    });
    SparseMatrix m;
    m.n = n;
    m.row_ptr.assign(n + 1, 0);
    for (size_t i = 0; i < triplets.size();) {
        size_t j = i + 1;
        double acc = triplets[i].val;
        while (j < triplets.size() && triplets[j].row == triplets[i].row &&
               triplets[j].col == triplets[i].col) {
            acc += triplets[j].val;
            ++j;
        }
        m.col.push_back(triplets[i].col);
        m.val.push_back(acc);
        ++m.row_ptr[triplets[i].row + 1];
        i = j;
    }
    for (int r = 0; r < n; ++r) m.row_ptr[r + 1] += m.row_ptr[r];
    return m;
}

// Every active component must reach a gamma1 edge, otherwise the reduced
// system is singular.
void check_components_anchored(const Mesh& mesh, const AdmissibleRegion& region) {
    const int nt = mesh.num_triangles();
    std::vector<int> parent(nt);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    };
    for (int t = 0; t < nt; ++t) {
        if (!region.element_active(t)) continue;
        for (int k = 0; k < 3; ++k) {
            const int s = mesh.neighbors[t][k];
            if (s >= 0 && region.element_active(s)) parent[find(t)] = find(s);
        }
    }
    std::vector<char> anchored(nt, 0);
    for (const auto& e : region.gamma1) anchored[find(e.tri)] = 1;
    for (int t = 0; t < nt; ++t) {
        if (region.element_active(t) && !anchored[find(t)]) {
            throw std::runtime_error(
                "equilibrium: singular system, active component of element " + std::to_string(t) +
                " has no Dirichlet boundary edge");
        }
    }
}

}  // namespace

AssembledSystem assemble(const EquilibriumProblem& problem) {
    const Mesh& mesh = *problem.mesh;
    const AdmissibleRegion& region = *problem.region;
    const Material& mat = *problem.material;
    const ScalarField& z = *problem.z;
    const VectorField& b = *problem.dirichlet_values;

    check_components_anchored(mesh, region);

    AssembledSystem sys;
    sys.constrained.assign(mesh.num_nodes(), 0);
    for (const auto& e : region.gamma1) {
        const auto& tri = mesh.triangles[e.tri];
        sys.constrained[tri[e.local]] = 1;
        sys.constrained[tri[(e.local + 1) % 3]] = 1;
    }

    sys.node_dof.assign(mesh.num_nodes(), -1);
    for (int n = 0; n < mesh.num_nodes(); ++n) {
        if (region.node_active(n) && !sys.constrained[n]) {
            sys.node_dof[n] = sys.n_free;
            sys.n_free += 2;
        }
    }
    sys.rhs.assign(sys.n_free, 0.0);

    std::vector<Triplet> triplets;
    triplets.reserve(static_cast<size_t>(region.num_active) * 36);
    double ke[6][6];
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        if (!region.element_active(t)) continue;
        const double zbar = element_average(mesh, z, t);
        if (problem.epsilon == 0.0) {
            const auto& tri = mesh.triangles[t];
            const double zmin = std::min({z[tri[0]], z[tri[1]], z[tri[2]]});
            if (zmin <= problem.theta_z) {
                throw std::runtime_error("equilibrium: element " + std::to_string(t) +
                                         " is degenerate (min nodal z <= theta_z) and epsilon is 0");
            }
        }
        const double factor = mat.g(zbar) + problem.epsilon;
        element_stiffness(mesh, t, mat.lambda, mat.mu, factor, ke);

        const auto& tri = mesh.triangles[t];
        int dof[6];
        double lift[6];
        for (int k = 0; k < 3; ++k) {
            const int n = tri[k];
            dof[2 * k] = sys.node_dof[n] >= 0 ? sys.node_dof[n] : -1;
            dof[2 * k + 1] = sys.node_dof[n] >= 0 ? sys.node_dof[n] + 1 : -1;
            lift[2 * k] = sys.constrained[n] ? b[2 * n] : 0.0;
            lift[2 * k + 1] = sys.constrained[n] ? b[2 * n + 1] : 0.0;
        }
        for (int i = 0; i < 6; ++i) {
            if (dof[i] < 0) continue;
            for (int j = 0; j < 6; ++j) {
                if (dof[j] >= 0) {
                    triplets.push_back({dof[i], dof[j], ke[i][j]});
                } else {
                    sys.rhs[dof[i]] -= ke[i][j] * lift[j];
                }
            }
        }
    }
    sys.matrix = csr_from_triplets(sys.n_free, triplets);
    return sys;
}

EquilibriumSolution solve_equilibrium(const EquilibriumProblem& problem) {
    const Mesh& mesh = *problem.mesh;
    const VectorField& b = *problem.dirichlet_values;

    AssembledSystem sys = assemble(problem);
    const int n = sys.n_free;

    EquilibriumSolution sol;
    sol.u.assign(2 * mesh.num_nodes(), 0.0);
    for (int nd = 0; nd < mesh.num_nodes(); ++nd) {
        if (sys.constrained[nd]) {
            sol.u[2 * nd] = b[2 * nd];
            sol.u[2 * nd + 1] = b[2 * nd + 1];
        }
    }
    if (n == 0) return sol;

    std::vector<double> diag(n, 0.0);
    for (int r = 0; r < n; ++r) {
        for (int k = sys.matrix.row_ptr[r]; k < sys.matrix.row_ptr[r + 1]; ++k) {
            if (sys.matrix.col[k] == r) diag[r] = sys.matrix.val[k];
        }
        if (!(diag[r] > 0.0)) {
            throw std::runtime_error("equilibrium: nonpositive diagonal at free DOF " +
                                     std::to_string(r));
        }
    }

    std::vector<double> x(n, 0.0), r = sys.rhs, zv(n), pdir(n), ap(n);
    for (int i = 0; i < n; ++i) zv[i] = r[i] / diag[i];
    pdir = zv;
    double delta = std::inner_product(r.begin(), r.end(), zv.begin(), 0.0);
    const double delta0 = delta;
    if (delta0 == 0.0) return sol;

    const double target2 = problem.tol * problem.tol * delta0;
    int it = 0;
    while (delta > target2) {
        if (it++ >= problem.max_iterations) {
            throw std::runtime_error("equilibrium: no convergence in " +
                                     std::to_string(problem.max_iterations) +
                                     " iterations, relative residual " +
                                     std::to_string(std::sqrt(delta / delta0)));
        }
        sys.matrix.multiply(pdir, ap);
        const double curv = std::inner_product(pdir.begin(), pdir.end(), ap.begin(), 0.0);
        if (!(curv > 0.0)) {
            throw std::runtime_error("equilibrium: direction of nonpositive curvature, "
                                     "the system is not positive definite");
        }
        const double step = delta / curv;
        for (int i = 0; i < n; ++i) {
            x[i] += step * pdir[i];
            r[i] -= step * ap[i];
        }
        for (int i = 0; i < n; ++i) zv[i] = r[i] / diag[i];
        const double delta_new = std::inner_product(r.begin(), r.end(), zv.begin(), 0.0);
        const double gamma = delta_new / delta;
        for (int i = 0; i < n; ++i) pdir[i] = zv[i] + gamma * pdir[i];
        delta = delta_new;
    }

    sol.residual = std::sqrt(delta / delta0);
    sol.iterations = it;
    for (int nd = 0; nd < mesh.num_nodes(); ++nd) {
        if (sys.node_dof[nd] >= 0) {
            sol.u[2 * nd] = x[sys.node_dof[nd]];
            sol.u[2 * nd + 1] = x[sys.node_dof[nd] + 1];
        }
    }
    return sol;
}

double stress_power(const Mesh& mesh, const AdmissibleRegion& region, const Material& mat,
                    const VectorField& u, const ScalarField& z, const VectorField& b_rate,
                    double epsilon, double tau) {
    double acc = 0.0;
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        if (!region.element_active(t)) continue;
        const Sym2 e = element_strain(mesh, u, t);
        const Sym2 eb = element_strain(mesh, b_rate, t);
        const double factor = mat.g(element_average(mesh, z, t)) + epsilon;
        acc += mesh.area[t] * factor * ddot(apply_c(mat.lambda, mat.mu, e), eb);
    }
    return acc * tau;
}

}  // namespace codam
