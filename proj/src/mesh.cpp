#include "codam/mesh.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <utility>

namespace codam {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::runtime_error(msg); }

[[noreturn]] void fail_arg(const std::string& msg) { throw std::invalid_argument(msg); }

std::pair<int, int> sorted_edge(int a, int b) {
    return a < b ? std::make_pair(a, b) : std::make_pair(b, a);
}

}  // namespace

void validate_material(const Material& mat) {
    if (!(mat.mu > 0.0)) fail_arg("material: mu must be > 0");
    if (!(mat.lambda + mat.mu > 0.0)) fail_arg("material: lambda + mu must be > 0");
    if (!(mat.alpha >= 0.0)) fail_arg("material: alpha must be >= 0");
    if (!(mat.beta > 0.0)) fail_arg("material: beta must be > 0");
    if (!(mat.p > 2.0)) fail_arg("material: p must be > 2");
    if (!(mat.eta > 0.0)) fail_arg("material: eta must be > 0");
    if (mat.g(0.0) != 0.0) fail_arg("material: g(0) must be 0");
    for (int i = 0; i <= 1000; ++i) {
        const double z = static_cast<double>(i) / 1000.0;
        if (mat.gprime(z) < mat.eta) {
            std::ostringstream os;
            os << "material: g'(" << z << ") = " << mat.gprime(z)
               << " falls below the declared lower bound eta = " << mat.eta;
            fail_arg(os.str());
        }
    }
}

Mesh build_mesh(std::vector<std::array<double, 2>> nodes,
                std::vector<std::array<int, 3>> triangles,
                std::vector<BoundaryEdge> boundary_edges) {
    Mesh mesh;
    mesh.nodes = std::move(nodes);
    mesh.triangles = std::move(triangles);
    mesh.boundary_edges = std::move(boundary_edges);

    const int nn = mesh.num_nodes();
    const int nt = mesh.num_triangles();
    if (nn == 0) fail("mesh: no nodes");
    if (nt == 0) fail("mesh: no triangles");

    mesh.area.resize(nt);
    mesh.hat_grad.resize(nt);
    mesh.neighbors.assign(nt, {-1, -1, -1});
    mesh.boundary_edge_of.assign(nt, {-1, -1, -1});

    // Orientation, areas, P1 hat gradients.
    for (int t = 0; t < nt; ++t) {
        const auto& tri = mesh.triangles[t];
        for (int v : tri) {
            if (v < 0 || v >= nn) {
                fail("mesh: triangle " + std::to_string(t) + " references node " +
                     std::to_string(v) + " out of range");
            }
        }
        const auto& a = mesh.nodes[tri[0]];
        const auto& b = mesh.nodes[tri[1]];
        const auto& c = mesh.nodes[tri[2]];
        const double twice = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
        if (!(twice > 0.0)) {
            fail("mesh: triangle " + std::to_string(t) + " has nonpositive area");
        }
        mesh.area[t] = 0.5 * twice;
        // grad phi_k = rot90(x_{k+2} - x_{k+1}) / (2A), with rot90(v) = (-vy, vx)
        // flipped to point inward; written out per vertex.
        mesh.hat_grad[t] = {
            (b[1] - c[1]) / twice, (c[0] - b[0]) / twice,
            (c[1] - a[1]) / twice, (a[0] - c[0]) / twice,
            (a[1] - b[1]) / twice, (b[0] - a[0]) / twice,
        };
    }

    // Edge adjacency via a map from sorted node pairs to (triangle, local edge).
    std::map<std::pair<int, int>, std::pair<int, int>> first_use;
    for (int t = 0; t < nt; ++t) {
        for (int k = 0; k < 3; ++k) {
            const int a = mesh.triangles[t][k];
            const int b = mesh.triangles[t][(k + 1) % 3];
            const auto key = sorted_edge(a, b);
            auto it = first_use.find(key);
            if (it == first_use.end()) {
                first_use.emplace(key, std::make_pair(t, k));
            } else if (it->second.first < 0) {
                fail("mesh: edge (" + std::to_string(key.first) + "," + std::to_string(key.second) +
                     ") is shared by more than two triangles");
            } else {
                const auto [s, j] = it->second;
                mesh.neighbors[t][k] = s;
                mesh.neighbors[s][j] = t;
                it->second.first = -1;
            }
        }
    }

    // Listed boundary edges must each match exactly one triangle edge that
    // has no neighbor, with no duplicates.
    int n_dirichlet = 0;
    std::map<std::pair<int, int>, int> listed;
    for (int e = 0; e < static_cast<int>(mesh.boundary_edges.size()); ++e) {
        const auto& be = mesh.boundary_edges[e];
        if (be.a < 0 || be.a >= nn || be.b < 0 || be.b >= nn || be.a == be.b) {
            fail("mesh: boundary edge " + std::to_string(e) + " has invalid node pair (" +
                 std::to_string(be.a) + "," + std::to_string(be.b) + ")");
        }
        const auto key = sorted_edge(be.a, be.b);
        if (!listed.emplace(key, e).second) {
            fail("mesh: boundary edge (" + std::to_string(be.a) + "," + std::to_string(be.b) +
                 ") listed twice");
        }
        if (be.tag == BoundaryTag::Dirichlet) ++n_dirichlet;
    }
    int matched = 0;
    for (int t = 0; t < nt; ++t) {
        for (int k = 0; k < 3; ++k) {
            if (mesh.neighbors[t][k] >= 0) continue;
            const auto key = sorted_edge(mesh.triangles[t][k], mesh.triangles[t][(k + 1) % 3]);
            auto it = listed.find(key);
            if (it == listed.end()) {
                fail("mesh: boundary edge (" + std::to_string(key.first) + "," +
                     std::to_string(key.second) + ") of triangle " + std::to_string(t) +
                     " is not listed in the boundary section");
            }
            mesh.boundary_edge_of[t][k] = it->second;
            ++matched;
        }
    }
    if (matched != static_cast<int>(mesh.boundary_edges.size())) {
        for (const auto& [key, e] : listed) {
            bool used = false;
            for (int t = 0; t < nt && !used; ++t)
                for (int k = 0; k < 3; ++k)
                    if (mesh.boundary_edge_of[t][k] == e) used = true;
            if (!used) {
                fail("mesh: listed boundary edge (" + std::to_string(key.first) + "," +
                     std::to_string(key.second) + ") is not a boundary edge of the triangulation");
            }
        }
    }
    if (n_dirichlet == 0) fail("mesh: no Dirichlet boundary edges");

    return mesh;
}

namespace {

// Line-oriented reader that tracks the 1-based line number and skips
// blank and comment lines.
class LineReader {
  public:
    LineReader(std::istream& in, std::string name) : in_(in), name_(std::move(name)) {}

    bool next(std::istringstream& fields) {
        std::string line;
        while (std::getline(in_, line)) {
            ++lineno_;
            size_t i = 0;
            while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
            if (i == line.size() || line[i] == '#') continue;
            fields.clear();
            fields.str(line);
            return true;
        }
        return false;
    }

    [[noreturn]] void fail_here(const std::string& msg) const {
        fail(name_ + ":" + std::to_string(lineno_) + ": " + msg);
    }

    [[noreturn]] void fail_eof(const std::string& msg) const {
        fail(name_ + ": unexpected end of file, " + msg);
    }

  private:
    std::istream& in_;
    std::string name_;
    int lineno_ = 0;
};

}  // namespace

Mesh load_mesh(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("mesh: cannot open '" + path + "'");
    LineReader reader(in, path);
    std::istringstream fields;

    auto read_count = [&](const char* keyword) {
        if (!reader.next(fields)) reader.fail_eof(std::string("expected '") + keyword + " <count>'");
        std::string word;
        long count = -1;
        if (!(fields >> word >> count) || word != keyword || count < 0) {
            reader.fail_here(std::string("expected '") + keyword + " <count>'");
        }
        std::string extra;
        if (fields >> extra) reader.fail_here("trailing tokens after count");
        return static_cast<int>(count);
    };

    const int nn = read_count("nodes");
    std::vector<std::array<double, 2>> nodes(nn);
    for (int i = 0; i < nn; ++i) {
        if (!reader.next(fields)) reader.fail_eof("expected " + std::to_string(nn) + " node lines");
        if (!(fields >> nodes[i][0] >> nodes[i][1])) {
            reader.fail_here("expected 'x y' for node " + std::to_string(i));
        }
    }

    const int nt = read_count("triangles");
    std::vector<std::array<int, 3>> triangles(nt);
    for (int i = 0; i < nt; ++i) {
        if (!reader.next(fields)) reader.fail_eof("expected " + std::to_string(nt) + " triangle lines");
        if (!(fields >> triangles[i][0] >> triangles[i][1] >> triangles[i][2])) {
            reader.fail_here("expected 'i j k' for triangle " + std::to_string(i));
        }
    }

    const int nb = read_count("boundary");
    std::vector<BoundaryEdge> edges(nb);
    for (int i = 0; i < nb; ++i) {
        if (!reader.next(fields)) reader.fail_eof("expected " + std::to_string(nb) + " boundary lines");
        std::string tag;
        if (!(fields >> edges[i].a >> edges[i].b >> tag) || (tag != "D" && tag != "N")) {
            reader.fail_here("expected 'i j TAG' with TAG D or N for boundary edge " +
                             std::to_string(i));
        }
        edges[i].tag = tag == "D" ? BoundaryTag::Dirichlet : BoundaryTag::Neumann;
    }
    if (reader.next(fields)) reader.fail_here("trailing content after boundary section");

    return build_mesh(std::move(nodes), std::move(triangles), std::move(edges));
}

Sym2 element_strain(const Mesh& mesh, const VectorField& u, int t) {
    const auto& tri = mesh.triangles[t];
    const auto& g = mesh.hat_grad[t];
    Sym2 e;
    for (int k = 0; k < 3; ++k) {
        const double ux = u[2 * tri[k]];
        const double uy = u[2 * tri[k] + 1];
        const double gx = g[2 * k];
        const double gy = g[2 * k + 1];
        e.xx += ux * gx;
        e.yy += uy * gy;
        e.xy += 0.5 * (ux * gy + uy * gx);
    }
    return e;
}

std::array<double, 2> element_gradient(const Mesh& mesh, const ScalarField& z, int t) {
    const auto& tri = mesh.triangles[t];
    const auto& g = mesh.hat_grad[t];
    std::array<double, 2> grad = {0.0, 0.0};
    for (int k = 0; k < 3; ++k) {
        grad[0] += z[tri[k]] * g[2 * k];
        grad[1] += z[tri[k]] * g[2 * k + 1];
    }
    return grad;
}

double element_average(const Mesh& mesh, const ScalarField& z, int t) {
    const auto& tri = mesh.triangles[t];
    return (z[tri[0]] + z[tri[1]] + z[tri[2]]) / 3.0;
}

double elastic_density(const Sym2& e, double z, double epsilon, const Material& mat) {
    return 0.5 * (mat.g(z) + epsilon) * celastic(mat.lambda, mat.mu, e);
}

}  // namespace codam
