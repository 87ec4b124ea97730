#pragma once

#include "codam/mesh.hpp"

namespace codam {

// One edge of the active set's boundary, identified by its active-side
// triangle and local edge index.
struct RegionEdge {
    int tri = -1;
    int local = -1;
};

// A set of elements whose every edge-connected component reaches a
// Dirichlet boundary edge, together with the induced node set and the
// partition of the set's boundary. Built by maximal_admissible; treat
// as immutable afterwards.
struct AdmissibleRegion {
    const Mesh* mesh = nullptr;
    std::vector<char> active_elements;
    std::vector<char> active_nodes;      // nodes incident to an active element
    std::vector<char> candidate_elements;  // input mask the region was carved from
    std::vector<RegionEdge> gamma1;      // active domain boundary, Dirichlet
    std::vector<RegionEdge> gamma2;      // active domain boundary, Neumann
    std::vector<RegionEdge> gamma3;      // interface between active and inactive
    int num_active = 0;

    bool element_active(int t) const { return active_elements[t] != 0; }
    bool node_active(int n) const { return active_nodes[n] != 0; }
};

// Element mask of the strict super-level set {z > threshold}: an element
// is in the mask iff all three of its nodal values exceed the threshold.
std::vector<char> superlevel_region(const Mesh& mesh, const ScalarField& z, double threshold);

// Largest subset of the given element mask all of whose edge-connected
// components own at least one full Dirichlet boundary edge. Components
// are taken over edge adjacency (vertex contact does not connect).
AdmissibleRegion maximal_admissible(const Mesh& mesh, const std::vector<char>& region);

// Region with every element admitted (minus any mesh component that has
// no Dirichlet edge at all).
AdmissibleRegion whole_mesh_region(const Mesh& mesh);

// Returns z with every inactive node set to 0; active nodes unchanged.
ScalarField truncate_field(const ScalarField& z, const AdmissibleRegion& region);

// Elements that left the region by disconnection rather than by damage
// exhaustion: active in prev, inactive in next, but still inside next's
// candidate mask. Ascending element order. Throws std::invalid_argument
// if next is not a subset of prev.
std::vector<int> detect_jump(const AdmissibleRegion& prev, const AdmissibleRegion& next);

}  // namespace codam
