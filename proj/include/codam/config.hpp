#pragma once

#include <array>
#include <string>
#include <vector>

#include "codam/mesh.hpp"

namespace codam {

// Boundary datum b(x,t) = c(t) + M(t) x, affine in space with each
// coefficient piecewise linear in time between knots.
struct BoundaryProgram {
    std::vector<double> times;                    // strictly increasing, times[0] == 0
    std::vector<std::array<double, 6>> coeffs;    // (c1 c2 m11 m12 m21 m22) per knot

    std::array<double, 6> eval(double t) const;   // clamped linear interpolation
};

// Nodal samples of the boundary datum at time t.
VectorField sample_boundary(const Mesh& mesh, const BoundaryProgram& bc, double t);

// One node-painting instruction for the initial damage field.
struct PaintBox {
    double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;
    double value = 0.0;
};

struct SimulationConfig {
    std::string mesh_path;
    std::string output_dir = "out";
    Material material;
    double T = 1.0;
    double tau = 0.01;
    double tau_min = 1e-6;
    double epsilon = 1e-8;
    double theta_z = 1e-8;
    double eta_fineness = 0.05;
    double z0_value = 1.0;
    std::vector<PaintBox> z0_boxes;               // applied in listed order
    BoundaryProgram bc;
    double stagger_tol = 1e-9;  // damage increment below which the stagger counts as stalled
    int stagger_max_outer = 200;
    double eq_tol = 1e-10;
    int eq_max_iterations = 20000;
    double kkt_tol = 1e-8;
    int kkt_max_iterations = 20000;
    double audit_tol = 1e-6;
    int snapshot_every = 1;
    unsigned long seed = 0;
    int threads = 1;
    std::vector<double> continuation_epsilons;    // for the continuation study
    std::vector<double> gamma_epsilons;           // paired schedules for the probe
    std::vector<double> gamma_deltas;
};

// Parses the line-oriented "key = value" format with dotted keys.
// Unknown keys, duplicate keys, malformed values and missing required
// keys (mesh, time.T, time.tau, bc.times, bc.values.*) are errors that
// name the file and line.
SimulationConfig parse_config(const std::string& path);

// Same parser over an in-memory string; name is used in messages.
SimulationConfig parse_config_text(const std::string& text, const std::string& name);

// Initial damage field: constant fill, then each paint box applied to
// the nodes it contains.
ScalarField initial_damage(const Mesh& mesh, const SimulationConfig& cfg);

}  // namespace codam
