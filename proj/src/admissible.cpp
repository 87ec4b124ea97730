#include "codam/admissible.hpp"

#include <numeric>
#include <stdexcept>

namespace codam {

namespace {

// Union-find with path halving and union by size.
class DisjointSets {
  public:
    explicit DisjointSets(int n) : parent_(n), size_(n, 1) {
        std::iota(parent_.begin(), parent_.end(), 0);
    }
    int find(int x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }
    void unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a == b) return;
        if (size_[a] < size_[b]) std::swap(a, b);
        parent_[b] = a;
        size_[a] += size_[b];
    }

  private:
    std::vector<int> parent_;
    std::vector<int> size_;
};

}  // namespace

std::vector<char> superlevel_region(const Mesh& mesh, const ScalarField& z, double threshold) {
    std::vector<char> mask(mesh.num_triangles(), 0);
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        const auto& tri = mesh.triangles[t];
        mask[t] = (z[tri[0]] > threshold && z[tri[1]] > threshold && z[tri[2]] > threshold) ? 1 : 0;
    }
    return mask;
}

AdmissibleRegion maximal_admissible(const Mesh& mesh, const std::vector<char>& region) {
    const int nt = mesh.num_triangles();
    if (static_cast<int>(region.size()) != nt) {
        throw std::invalid_argument("maximal_admissible: mask size does not match the mesh");
    }

    DisjointSets sets(nt);
    for (int t = 0; t < nt; ++t) {
        if (!region[t]) continue;
        for (int k = 0; k < 3; ++k) {
            const int s = mesh.neighbors[t][k];
            if (s >= 0 && region[s]) sets.unite(t, s);
        }
    }

    // A component survives iff one of its elements owns a Dirichlet edge.
    std::vector<char> root_keeps(nt, 0);
    for (int t = 0; t < nt; ++t) {
        if (!region[t]) continue;
        for (int k = 0; k < 3; ++k) {
            const int e = mesh.boundary_edge_of[t][k];
            if (e >= 0 && mesh.boundary_edges[e].tag == BoundaryTag::Dirichlet) {
                root_keeps[sets.find(t)] = 1;
                break;
            }
        }
    }

    AdmissibleRegion out;
    out.mesh = &mesh;
    out.candidate_elements = region;
    out.active_elements.assign(nt, 0);
    out.active_nodes.assign(mesh.num_nodes(), 0);
    for (int t = 0; t < nt; ++t) {
        if (!region[t] || !root_keeps[sets.find(t)]) continue;
        out.active_elements[t] = 1;
        ++out.num_active;
        for (int v : mesh.triangles[t]) out.active_nodes[v] = 1;
    }

    // Boundary partition of the active set.
    for (int t = 0; t < nt; ++t) {
        if (!out.active_elements[t]) continue;
        for (int k = 0; k < 3; ++k) {
            const int s = mesh.neighbors[t][k];
            if (s < 0) {
                const int e = mesh.boundary_edge_of[t][k];
                if (mesh.boundary_edges[e].tag == BoundaryTag::Dirichlet) {
                    out.gamma1.push_back({t, k});
                } else {
                    out.gamma2.push_back({t, k});
                }
            } else if (!out.active_elements[s]) {
                out.gamma3.push_back({t, k});
            }
        }
    }
    return out;
}

AdmissibleRegion whole_mesh_region(const Mesh& mesh) {
    return maximal_admissible(mesh, std::vector<char>(mesh.num_triangles(), 1));
}

ScalarField truncate_field(const ScalarField& z, const AdmissibleRegion& region) {
    ScalarField out = z;
    for (size_t n = 0; n < out.size(); ++n) {
        if (!region.active_nodes[n]) out[n] = 0.0;
    }
    return out;
}

std::vector<int> detect_jump(const AdmissibleRegion& prev, const AdmissibleRegion& next) {
    const int nt = static_cast<int>(prev.active_elements.size());
    std::vector<int> excluded;
    for (int t = 0; t < nt; ++t) {
        if (next.active_elements[t] && !prev.active_elements[t]) {
            throw std::invalid_argument("detect_jump: element " + std::to_string(t) +
                                        " is active in the new region but not the old one");
        }
        if (prev.active_elements[t] && !next.active_elements[t] && next.candidate_elements[t]) {
            excluded.push_back(t);
        }
    }
    return excluded;
}

}  // namespace codam
