#include "codam/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace codam {

std::array<double, 6> BoundaryProgram::eval(double t) const {
    if (t <= times.front()) return coeffs.front();
    if (t >= times.back()) return coeffs.back();
    size_t k = 1;
    while (times[k] < t) ++k;
    const double w = (t - times[k - 1]) / (times[k] - times[k - 1]);
    std::array<double, 6> out;
    for (int i = 0; i < 6; ++i) out[i] = (1.0 - w) * coeffs[k - 1][i] + w * coeffs[k][i];
    return out;
}

VectorField sample_boundary(const Mesh& mesh, const BoundaryProgram& bc, double t) {
    const auto c = bc.eval(t);
    VectorField b(2 * mesh.num_nodes());
    for (int n = 0; n < mesh.num_nodes(); ++n) {
        const double x = mesh.nodes[n][0];
        const double y = mesh.nodes[n][1];
        b[2 * n] = c[0] + c[2] * x + c[3] * y;
        b[2 * n + 1] = c[1] + c[4] * x + c[5] * y;
    }
    return b;
}

namespace {

struct Entry {
    std::string value;
    int line = 0;
};

[[noreturn]] void fail_at(const std::string& name, int line, const std::string& msg) {
    throw std::runtime_error(name + ":" + std::to_string(line) + ": " + msg);
}

std::string trim(const std::string& s) {
    size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

// Key-value store preserving source lines, with consumption tracking so
// unconsumed (unknown) keys can be reported.
class KeyStore {
  public:
    KeyStore(const std::string& text, std::string name) : name_(std::move(name)) {
        std::istringstream in(text);
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const std::string stripped = trim(line);
            if (stripped.empty() || stripped[0] == '#') continue;
            const size_t eq = stripped.find('=');
            if (eq == std::string::npos) fail_at(name_, lineno, "expected 'key = value'");
            const std::string key = trim(stripped.substr(0, eq));
            const std::string value = trim(stripped.substr(eq + 1));
            if (key.empty()) fail_at(name_, lineno, "empty key");
            if (value.empty()) fail_at(name_, lineno, "empty value for key '" + key + "'");
            if (!entries_.emplace(key, Entry{value, lineno}).second) {
                fail_at(name_, lineno, "duplicate key '" + key + "'");
            }
        }
    }

    const Entry* take(const std::string& key) {
        auto it = entries_.find(key);
        if (it == entries_.end()) return nullptr;
        consumed_.insert(consumed_.end(), key);
        return &it->second;
    }

    // Keys with the given prefix followed by a suffix, in entry order.
    std::vector<std::string> keys_with_prefix(const std::string& prefix) const {
        std::vector<std::string> out;
        for (const auto& [k, v] : entries_) {
            if (k.size() > prefix.size() && k.compare(0, prefix.size(), prefix) == 0) {
                out.push_back(k);
            }
        }
        return out;
    }

    void finish() const {
        for (const auto& [k, v] : entries_) {
            if (std::find(consumed_.begin(), consumed_.end(), k) == consumed_.end()) {
                fail_at(name_, v.line, "unknown key '" + k + "'");
            }
        }
    }

    const std::string& name() const { return name_; }

  private:
    std::string name_;
    std::map<std::string, Entry> entries_;
    std::vector<std::string> consumed_;
};

double parse_double(const KeyStore& store, const std::string& key, const Entry& e) {
    std::istringstream ss(e.value);
    double v;
    std::string extra;
    if (!(ss >> v) || (ss >> extra)) {
        fail_at(store.name(), e.line, "key '" + key + "' expects one number, got '" + e.value + "'");
    }
    return v;
}

int parse_int(const KeyStore& store, const std::string& key, const Entry& e) {
    std::istringstream ss(e.value);
    long v;
    std::string extra;
    if (!(ss >> v) || (ss >> extra)) {
        fail_at(store.name(), e.line, "key '" + key + "' expects one integer, got '" + e.value + "'");
    }
    return static_cast<int>(v);
}

std::vector<double> parse_doubles(const KeyStore& store, const std::string& key, const Entry& e,
                                  size_t exact = 0) {
    std::istringstream ss(e.value);
    std::vector<double> out;
    double v;
    while (ss >> v) out.push_back(v);
    std::string extra;
    ss.clear();
    if (ss >> extra) {
        fail_at(store.name(), e.line, "key '" + key + "' has a non-numeric token '" + extra + "'");
    }
    if (out.empty() || (exact > 0 && out.size() != exact)) {
        fail_at(store.name(), e.line,
                "key '" + key + "' expects " +
                    (exact > 0 ? std::to_string(exact) + " numbers" : std::string("numbers")));
    }
    return out;
}

}  // namespace

SimulationConfig parse_config_text(const std::string& text, const std::string& name) {
    KeyStore store(text, name);
    SimulationConfig cfg;

    auto required = [&](const std::string& key) -> const Entry& {
        const Entry* e = store.take(key);
        if (!e) throw std::runtime_error(name + ": missing required key '" + key + "'");
        return *e;
    };
    auto opt_double = [&](const std::string& key, double& slot) {
        if (const Entry* e = store.take(key)) slot = parse_double(store, key, *e);
    };
    auto opt_int = [&](const std::string& key, int& slot) {
        if (const Entry* e = store.take(key)) slot = parse_int(store, key, *e);
    };

    cfg.mesh_path = required("mesh").value;
    if (const Entry* e = store.take("output")) cfg.output_dir = e->value;
    if (const Entry* e = store.take("seed")) {
        cfg.seed = static_cast<unsigned long>(parse_double(store, "seed", *e));
    }
    opt_int("threads", cfg.threads);
    if (cfg.threads < 1) throw std::runtime_error(name + ": threads must be >= 1");

    opt_double("material.lambda", cfg.material.lambda);
    opt_double("material.mu", cfg.material.mu);
    opt_double("material.alpha", cfg.material.alpha);
    opt_double("material.beta", cfg.material.beta);
    opt_double("material.p", cfg.material.p);
    if (const Entry* e = store.take("material.g")) {
        if (e->value == "linear") {
            cfg.material.g_kind = GKind::Linear;
        } else if (e->value == "eta_quadratic") {
            cfg.material.g_kind = GKind::EtaQuadratic;
        } else {
            fail_at(name, e->line, "material.g must be 'linear' or 'eta_quadratic'");
        }
    }
    opt_double("material.eta", cfg.material.eta);
    validate_material(cfg.material);

    cfg.T = parse_double(store, "time.T", required("time.T"));
    cfg.tau = parse_double(store, "time.tau", required("time.tau"));
    opt_double("time.tau_min", cfg.tau_min);
    if (!(cfg.T > 0.0) || !(cfg.tau > 0.0) || !(cfg.tau_min > 0.0)) {
        throw std::runtime_error(name + ": time.T, time.tau and time.tau_min must be positive");
    }

    opt_double("epsilon", cfg.epsilon);
    opt_double("theta_z", cfg.theta_z);
    opt_double("eta_fineness", cfg.eta_fineness);
    if (!(cfg.epsilon >= 0.0)) throw std::runtime_error(name + ": epsilon must be >= 0");

    opt_double("z0", cfg.z0_value);
    std::vector<std::pair<long, std::string>> box_keys;
    for (const std::string& key : store.keys_with_prefix("z0.box.")) {
        const std::string suffix = key.substr(7);
        char* end = nullptr;
        const long index = std::strtol(suffix.c_str(), &end, 10);
        if (end == suffix.c_str() || *end != '\0' || index < 0) {
            throw std::runtime_error(name + ": key '" + key + "' needs a numeric box index");
        }
        box_keys.emplace_back(index, key);
    }
    std::sort(box_keys.begin(), box_keys.end());
    for (const auto& [index, key] : box_keys) {
        const Entry* e = store.take(key);
        const auto v = parse_doubles(store, key, *e, 5);
        cfg.z0_boxes.push_back({v[0], v[1], v[2], v[3], v[4]});
    }

    const Entry& times_entry = required("bc.times");
    cfg.bc.times = parse_doubles(store, "bc.times", times_entry);
    if (cfg.bc.times.front() != 0.0) {
        fail_at(name, times_entry.line, "bc.times must start at 0");
    }
    for (size_t i = 1; i < cfg.bc.times.size(); ++i) {
        if (!(cfg.bc.times[i] > cfg.bc.times[i - 1])) {
            fail_at(name, times_entry.line, "bc.times must be strictly increasing");
        }
    }
    cfg.bc.coeffs.resize(cfg.bc.times.size());
    for (size_t k = 0; k < cfg.bc.times.size(); ++k) {
        const std::string key = "bc.values." + std::to_string(k);
        const Entry& e = required(key);
        const auto v = parse_doubles(store, key, e, 6);
        std::copy(v.begin(), v.end(), cfg.bc.coeffs[k].begin());
    }

    opt_double("stagger.tol", cfg.stagger_tol);
    opt_int("stagger.max_outer", cfg.stagger_max_outer);
    opt_double("solver.eq_tol", cfg.eq_tol);
    opt_int("solver.eq_max_iterations", cfg.eq_max_iterations);
    opt_double("solver.kkt_tol", cfg.kkt_tol);
    opt_int("solver.kkt_max_iterations", cfg.kkt_max_iterations);
    opt_double("audit.tol", cfg.audit_tol);
    opt_int("snapshots.every", cfg.snapshot_every);
    if (cfg.snapshot_every < 1) throw std::runtime_error(name + ": snapshots.every must be >= 1");

    if (const Entry* e = store.take("continuation.epsilons")) {
        cfg.continuation_epsilons = parse_doubles(store, "continuation.epsilons", *e);
    }
    if (const Entry* e = store.take("gamma.epsilons")) {
        cfg.gamma_epsilons = parse_doubles(store, "gamma.epsilons", *e);
    }
    if (const Entry* e = store.take("gamma.deltas")) {
        cfg.gamma_deltas = parse_doubles(store, "gamma.deltas", *e);
    }

    store.finish();
    return cfg;
}

SimulationConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str(), path);
}

ScalarField initial_damage(const Mesh& mesh, const SimulationConfig& cfg) {
    ScalarField z(mesh.num_nodes(), cfg.z0_value);
    for (const PaintBox& box : cfg.z0_boxes) {
        for (int n = 0; n < mesh.num_nodes(); ++n) {
            const double x = mesh.nodes[n][0];
            const double y = mesh.nodes[n][1];
            if (x >= box.x0 && x <= box.x1 && y >= box.y0 && y <= box.y1) z[n] = box.value;
        }
    }
    return z;
}

}  // namespace codam
