#pragma once

#include <array>
#include <string>
#include <vector>

namespace codam {

// ============================================================
// Small tensor algebra for plane linear elasticity
// ============================================================

// Symmetric 2x2 tensor, components (xx, yy, xy).
struct Sym2 {
    double xx = 0.0;
    double yy = 0.0;
    double xy = 0.0;
};

inline double trace(const Sym2& e) { return e.xx + e.yy; }

// Full contraction a : b (the off-diagonal pair counts twice).
inline double ddot(const Sym2& a, const Sym2& b) {
    return a.xx * b.xx + a.yy * b.yy + 2.0 * a.xy * b.xy;
}

// C e : e for the isotropic tensor C(lambda, mu).
inline double celastic(double lambda, double mu, const Sym2& e) {
    const double tr = trace(e);
    return lambda * tr * tr + 2.0 * mu * ddot(e, e);
}

// C e = lambda tr(e) I + 2 mu e.
inline Sym2 apply_c(double lambda, double mu, const Sym2& e) {
    const double tr = lambda * trace(e);
    return Sym2{tr + 2.0 * mu * e.xx, tr + 2.0 * mu * e.yy, 2.0 * mu * e.xy};
}

// ============================================================
// Material
// ============================================================

// Degradation function family. Both choices satisfy g(0) = 0, g(1) = 1
// and g' >= eta on [0,1].
enum class GKind {
    Linear,       // g(z) = z, eta = 1
    EtaQuadratic  // g(z) = eta z + (1 - eta) z^2
};

struct Material {
    double lambda = 1.0;  // Lame modulus, lambda + mu > 0
    double mu = 1.0;      // shear modulus, mu > 0
    double alpha = 0.0;   // damage activation threshold, >= 0
    double beta = 1.0;    // damage viscosity, > 0
    double p = 4.0;       // gradient exponent, > 2
    GKind g_kind = GKind::Linear;
    double eta = 1.0;     // declared lower bound on g' over [0,1], > 0

    double g(double z) const {
        if (g_kind == GKind::Linear) return z;
        return eta * z + (1.0 - eta) * z * z;
    }
    double gprime(double z) const {
        if (g_kind == GKind::Linear) return 1.0;
        return eta + 2.0 * (1.0 - eta) * z;
    }
};

// Throws std::invalid_argument on a violated parameter constraint.
// g' >= eta is checked by sampling g' at 1001 uniform points of [0,1].
void validate_material(const Material& mat);

// ============================================================
// Mesh
// ============================================================

enum class BoundaryTag { Dirichlet, Neumann };

struct BoundaryEdge {
    int a = -1;
    int b = -1;
    BoundaryTag tag = BoundaryTag::Neumann;
};

// Conforming triangle mesh of a polygonal domain. Immutable after
// construction; all numbering is 0-based. Local edge k of a triangle
// joins its vertices k and (k+1) mod 3.
struct Mesh {
    std::vector<std::array<double, 2>> nodes;
    std::vector<std::array<int, 3>> triangles;     // CCW vertex triples
    std::vector<BoundaryEdge> boundary_edges;      // disjoint cover of the topological boundary
    std::vector<std::array<int, 3>> neighbors;     // adjacent triangle per local edge, -1 on the boundary
    std::vector<double> area;                      // element areas, all > 0
    std::vector<std::array<double, 6>> hat_grad;   // P1 hat gradients (g0x g0y g1x g1y g2x g2y)
    std::vector<std::array<int, 3>> boundary_edge_of;  // boundary_edges index per local edge, -1 if none

    int num_nodes() const { return static_cast<int>(nodes.size()); }
    int num_triangles() const { return static_cast<int>(triangles.size()); }
};

// Nodal fields. A VectorField stores node i's components at 2i and 2i+1.
using ScalarField = std::vector<double>;
using VectorField = std::vector<double>;

// Validates connectivity and orientation, computes areas, hat gradients
// and edge adjacency. Throws std::runtime_error naming the offending
// entity on: nonpositive element area, an index out of range, a listed
// boundary edge that is interior or unmatched, a duplicate listing, an
// uncovered boundary edge, or an empty Dirichlet set.
Mesh build_mesh(std::vector<std::array<double, 2>> nodes,
                std::vector<std::array<int, 3>> triangles,
                std::vector<BoundaryEdge> boundary_edges);

// Reads the plain-text mesh format:
//
//   nodes N        followed by N lines "x y"
//   triangles M    followed by M lines "i j k"
//   boundary B     followed by B lines "i j TAG", TAG one of D, N
//
// Lines whose first non-space character is '#' are comments. Errors
// carry the file name and 1-based line number.
Mesh load_mesh(const std::string& path);

// ============================================================
// Element quantities
// ============================================================

// Symmetric gradient of u on triangle t (constant for P1).
Sym2 element_strain(const Mesh& mesh, const VectorField& u, int t);

// Gradient of a scalar field on triangle t.
std::array<double, 2> element_gradient(const Mesh& mesh, const ScalarField& z, int t);

// Average of the three nodal values of z on triangle t.
double element_average(const Mesh& mesh, const ScalarField& z, int t);

// Stored elastic energy density (1/2)(g(z) + epsilon) C e : e.
double elastic_density(const Sym2& e, double z, double epsilon, const Material& mat);

}  // namespace codam
