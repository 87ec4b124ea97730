#pragma once

// Shared fixtures and independent oracles for the test suite. The
// oracles deliberately re-derive their answers from first principles
// (breadth-first search, dense assembly and elimination, difference
// quotients) so they share no code path with the library.

#include <array>
#include <cmath>
#include <fstream>
#include <functional>
#include <queue>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "codam/admissible.hpp"
#include "codam/mesh.hpp"

namespace testsupport {

using codam::BoundaryEdge;
using codam::BoundaryTag;
using codam::Material;
using codam::Mesh;
using codam::ScalarField;
using codam::VectorField;

// ------------------------------------------------------------
// Mesh construction
// ------------------------------------------------------------

// Raw mesh arrays kept around so tests can serialize or perturb them
// before handing them to build_mesh.
struct RawMesh {
    std::vector<std::array<double, 2>> nodes;
    std::vector<std::array<int, 3>> triangles;
    std::vector<BoundaryEdge> boundary;

    Mesh build() const { return codam::build_mesh(nodes, triangles, boundary); }

    std::string to_text() const {
        std::ostringstream out;
        out.precision(17);
        out << "nodes " << nodes.size() << "\n";
        for (const auto& n : nodes) out << n[0] << ' ' << n[1] << "\n";
        out << "triangles " << triangles.size() << "\n";
        for (const auto& t : triangles) out << t[0] << ' ' << t[1] << ' ' << t[2] << "\n";
        out << "boundary " << boundary.size() << "\n";
        for (const auto& e : boundary) {
            out << e.a << ' ' << e.b << ' ' << (e.tag == BoundaryTag::Dirichlet ? 'D' : 'N')
                << "\n";
        }
        return out.str();
    }
};

struct GridSides {
    bool left = true;
    bool right = false;
    bool bottom = false;
    bool top = false;
};

// Structured nx-by-ny grid of [0,w] x [0,h], each cell split along the
// diagonal into two CCW triangles. Sides marked in `dirichlet` are
// tagged D, the rest N.
inline RawMesh make_grid(int nx, int ny, double w = 1.0, double h = 1.0,
                         GridSides dirichlet = {}) {
    RawMesh m;
    auto id = [nx](int i, int j) { return j * (nx + 1) + i; };
    for (int j = 0; j <= ny; ++j) {
        for (int i = 0; i <= nx; ++i) {
            m.nodes.push_back({w * i / nx, h * j / ny});
        }
    }
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const int a = id(i, j), b = id(i + 1, j), c = id(i + 1, j + 1), d = id(i, j + 1);
            m.triangles.push_back({a, b, c});
            m.triangles.push_back({a, c, d});
        }
    }
    auto tag = [](bool d) { return d ? BoundaryTag::Dirichlet : BoundaryTag::Neumann; };
    for (int i = 0; i < nx; ++i) {
        m.boundary.push_back({id(i, 0), id(i + 1, 0), tag(dirichlet.bottom)});
        m.boundary.push_back({id(i, ny), id(i + 1, ny), tag(dirichlet.top)});
    }
    for (int j = 0; j < ny; ++j) {
        m.boundary.push_back({id(0, j), id(0, j + 1), tag(dirichlet.left)});
        m.boundary.push_back({id(nx, j), id(nx, j + 1), tag(dirichlet.right)});
    }
    return m;
}

// Same grid with interior nodes jittered by at most `scale` cell widths
// (scale < 0.25 keeps all orientations positive).
inline RawMesh make_jittered_grid(int nx, int ny, double scale, std::mt19937_64& rng,
                                  GridSides dirichlet = {}) {
    RawMesh m = make_grid(nx, ny, 1.0, 1.0, dirichlet);
    std::uniform_real_distribution<double> jitter(-scale, scale);
    for (int j = 1; j < ny; ++j) {
        for (int i = 1; i < nx; ++i) {
            auto& n = m.nodes[j * (nx + 1) + i];
            n[0] += jitter(rng) / nx;
            n[1] += jitter(rng) / ny;
        }
    }
    return m;
}

inline void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("test support: cannot write " + path);
    out << text;
}

// ------------------------------------------------------------
// Flood-fill oracle for the admissible set
// ------------------------------------------------------------

// Breadth-first search over edge adjacency from every masked element
// owning a full Dirichlet boundary edge. Independent of the union-find
// in the library.
inline std::vector<char> flood_admissible(const Mesh& mesh, const std::vector<char>& mask) {
    std::vector<char> out(mesh.num_triangles(), 0);
    std::queue<int> queue;
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        if (!mask[t]) continue;
        for (int k = 0; k < 3; ++k) {
            const int be = mesh.boundary_edge_of[t][k];
            if (be >= 0 && mesh.boundary_edges[be].tag == BoundaryTag::Dirichlet) {
                if (!out[t]) {
                    out[t] = 1;
                    queue.push(t);
                }
            }
        }
    }
    while (!queue.empty()) {
        const int t = queue.front();
        queue.pop();
        for (int k = 0; k < 3; ++k) {
            const int n = mesh.neighbors[t][k];
            if (n >= 0 && mask[n] && !out[n]) {
                out[n] = 1;
                queue.push(n);
            }
        }
    }
    return out;
}

// ------------------------------------------------------------
// Dense equilibrium oracle
// ------------------------------------------------------------

// Gaussian elimination with partial pivoting on a dense system.
inline std::vector<double> dense_solve(std::vector<std::vector<double>> a,
                                       std::vector<double> b) {
    const int n = static_cast<int>(b.size());
    for (int k = 0; k < n; ++k) {
        int piv = k;
        for (int r = k + 1; r < n; ++r) {
            if (std::abs(a[r][k]) > std::abs(a[piv][k])) piv = r;
        }
        if (std::abs(a[piv][k]) < 1e-300) throw std::runtime_error("dense_solve: singular");
        std::swap(a[k], a[piv]);
        std::swap(b[k], b[piv]);
        for (int r = k + 1; r < n; ++r) {
            const double f = a[r][k] / a[k][k];
            if (f == 0.0) continue;
            for (int c = k; c < n; ++c) a[r][c] -= f * a[k][c];
            b[r] -= f * b[k];
        }
    }
    std::vector<double> x(n, 0.0);
    for (int k = n - 1; k >= 0; --k) {
        double s = b[k];
        for (int c = k + 1; c < n; ++c) s -= a[k][c] * x[c];
        x[k] = s / a[k][k];
    }
    return x;
}

// Element stiffness from the coordinate formula for P1 hat gradients,
// written without touching the library's cached gradients.
inline std::array<std::array<double, 6>, 6> oracle_element_stiffness(const Mesh& mesh, int t,
                                                                     double factor,
                                                                     const Material& mat) {
    const auto& tri = mesh.triangles[t];
    const double x1 = mesh.nodes[tri[0]][0], y1 = mesh.nodes[tri[0]][1];
    const double x2 = mesh.nodes[tri[1]][0], y2 = mesh.nodes[tri[1]][1];
    const double x3 = mesh.nodes[tri[2]][0], y3 = mesh.nodes[tri[2]][1];
    const double det = (x2 - x1) * (y3 - y1) - (x3 - x1) * (y2 - y1);
    const double area = 0.5 * det;
    const double gx[3] = {(y2 - y3) / det, (y3 - y1) / det, (y1 - y2) / det};
    const double gy[3] = {(x3 - x2) / det, (x1 - x3) / det, (x2 - x1) / det};

    // Rows of B map nodal displacements to (exx, eyy, 2 exy).
    double B[3][6] = {};
    for (int k = 0; k < 3; ++k) {
        B[0][2 * k] = gx[k];
        B[1][2 * k + 1] = gy[k];
        B[2][2 * k] = gy[k];
        B[2][2 * k + 1] = gx[k];
    }
    const double l = mat.lambda, mu = mat.mu;
    const double D[3][3] = {{l + 2 * mu, l, 0}, {l, l + 2 * mu, 0}, {0, 0, mu}};

    std::array<std::array<double, 6>, 6> ke{};
    for (int r = 0; r < 6; ++r) {
        for (int c = 0; c < 6; ++c) {
            double s = 0.0;
            for (int i = 0; i < 3; ++i) {
                for (int j = 0; j < 3; ++j) s += B[i][r] * D[i][j] * B[j][c];
            }
            ke[r][c] = factor * area * s;
        }
    }
    return ke;
}

// Full equilibrium solve by dense elimination: active elements carry
// stiffness g(zbar)+eps, nodes on active-side Dirichlet boundary edges
// take the datum, inactive nodes take 0.
inline VectorField oracle_equilibrium(const Mesh& mesh, const Material& mat,
                                      const codam::AdmissibleRegion& region,
                                      const ScalarField& z, const VectorField& b_values,
                                      double epsilon) {
    const int n = mesh.num_nodes();
    std::vector<char> constrained(n, 0);
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        if (!region.element_active(t)) continue;
        for (int k = 0; k < 3; ++k) {
            const int be = mesh.boundary_edge_of[t][k];
            if (be >= 0 && mesh.boundary_edges[be].tag == BoundaryTag::Dirichlet) {
                constrained[mesh.boundary_edges[be].a] = 1;
                constrained[mesh.boundary_edges[be].b] = 1;
            }
        }
    }

    std::vector<int> dof(2 * n, -1);
    int n_free = 0;
    for (int i = 0; i < n; ++i) {
        if (region.node_active(i) && !constrained[i]) {
            dof[2 * i] = n_free++;
            dof[2 * i + 1] = n_free++;
        }
    }

    VectorField u(2 * n, 0.0);
    for (int i = 0; i < n; ++i) {
        if (constrained[i]) {
            u[2 * i] = b_values[2 * i];
            u[2 * i + 1] = b_values[2 * i + 1];
        }
    }
    if (n_free == 0) return u;

    std::vector<std::vector<double>> K(n_free, std::vector<double>(n_free, 0.0));
    std::vector<double> rhs(n_free, 0.0);
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        if (!region.element_active(t)) continue;
        const auto& tri = mesh.triangles[t];
        const double zbar = (z[tri[0]] + z[tri[1]] + z[tri[2]]) / 3.0;
        const auto ke = oracle_element_stiffness(mesh, t, mat.g(zbar) + epsilon, mat);
        int gdof[6];
        double lift[6];
        for (int k = 0; k < 3; ++k) {
            gdof[2 * k] = dof[2 * tri[k]];
            gdof[2 * k + 1] = dof[2 * tri[k] + 1];
            lift[2 * k] = constrained[tri[k]] ? b_values[2 * tri[k]] : 0.0;
            lift[2 * k + 1] = constrained[tri[k]] ? b_values[2 * tri[k] + 1] : 0.0;
        }
        for (int r = 0; r < 6; ++r) {
            if (gdof[r] < 0) continue;
            for (int c = 0; c < 6; ++c) {
                if (gdof[c] >= 0) {
                    K[gdof[r]][gdof[c]] += ke[r][c];
                } else {
                    rhs[gdof[r]] -= ke[r][c] * lift[c];
                }
            }
        }
    }

    const std::vector<double> x = dense_solve(std::move(K), std::move(rhs));
    for (int i = 0; i < 2 * n; ++i) {
        if (dof[i] >= 0) u[i] = x[dof[i]];
    }
    return u;
}

// ------------------------------------------------------------
// Difference quotients
// ------------------------------------------------------------

// Central difference of f in the i-th nodal direction.
inline double fd_partial(const std::function<double(const ScalarField&)>& f, ScalarField z,
                         size_t i, double h) {
    const double zi = z[i];
    z[i] = zi + h;
    const double fp = f(z);
    z[i] = zi - h;
    const double fm = f(z);
    return (fp - fm) / (2.0 * h);
}

// ------------------------------------------------------------
// Field helpers
// ------------------------------------------------------------

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

inline ScalarField random_field(int n, double lo, double hi, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> dist(lo, hi);
    ScalarField z(n);
    for (double& v : z) v = dist(rng);
    return z;
}

inline std::vector<char> random_mask(int n, double keep_probability, std::mt19937_64& rng) {
    std::bernoulli_distribution dist(keep_probability);
    std::vector<char> mask(n);
    for (char& v : mask) v = dist(rng) ? 1 : 0;
    return mask;
}

}  // namespace testsupport
