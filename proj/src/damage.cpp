#include "codam/damage.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace codam {

namespace {

// Per-element data that stays fixed over one damage solve.
struct StepCache {
    std::vector<int> elements;       // active element indices
    std::vector<double> area;
    std::vector<double> wdens;       // (1/2) C e : e at the frozen displacement
    std::vector<double> zbar_prev;
    std::vector<std::array<int, 3>> tri;
    std::vector<std::array<double, 6>> grad;
};

StepCache make_cache(const IncrementalDamageProblem& prob) {
    const Mesh& mesh = *prob.mesh;
    StepCache c;
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        if (!prob.region->element_active(t)) continue;
        c.elements.push_back(t);
        c.area.push_back(mesh.area[t]);
        const Sym2 e = element_strain(mesh, *prob.u, t);
        c.wdens.push_back(0.5 * celastic(prob.material->lambda, prob.material->mu, e));
        c.zbar_prev.push_back(element_average(mesh, *prob.z_prev, t));
        c.tri.push_back(mesh.triangles[t]);
        c.grad.push_back(mesh.hat_grad[t]);
    }
    return c;
}

double cached_energy(const IncrementalDamageProblem& prob, const StepCache& c,
                     const ScalarField& z) {
    const Material& mat = *prob.material;
    const double pinv = 1.0 / mat.p;
    double acc = 0.0;
    for (size_t i = 0; i < c.elements.size(); ++i) {
        const auto& tri = c.tri[i];
        const auto& g = c.grad[i];
        double gx = 0.0, gy = 0.0;
        for (int k = 0; k < 3; ++k) {
            gx += z[tri[k]] * g[2 * k];
            gy += z[tri[k]] * g[2 * k + 1];
        }
        const double s2 = gx * gx + gy * gy;
        const double zbar = (z[tri[0]] + z[tri[1]] + z[tri[2]]) / 3.0;
        const double dz = zbar - c.zbar_prev[i];
        acc += c.area[i] * (pinv * std::pow(s2, 0.5 * mat.p) +
                            (mat.g(zbar) + prob.epsilon) * c.wdens[i] +
                            (-mat.alpha * dz + 0.5 * mat.beta / prob.tau * dz * dz));
    }
    return acc;
}

void cached_gradient(const IncrementalDamageProblem& prob, const StepCache& c,
                     const ScalarField& z, std::vector<double>& out) {
    const Material& mat = *prob.material;
    out.assign(z.size(), 0.0);
    for (size_t i = 0; i < c.elements.size(); ++i) {
        const auto& tri = c.tri[i];
        const auto& g = c.grad[i];
        double gx = 0.0, gy = 0.0;
        for (int k = 0; k < 3; ++k) {
            gx += z[tri[k]] * g[2 * k];
            gy += z[tri[k]] * g[2 * k + 1];
        }
        const double s2 = gx * gx + gy * gy;
        const double sp2 = s2 > 0.0 ? std::pow(s2, 0.5 * mat.p - 1.0) : 0.0;
        const double zbar = (z[tri[0]] + z[tri[1]] + z[tri[2]]) / 3.0;
        const double dz = zbar - c.zbar_prev[i];
        const double third = (mat.gprime(zbar) * c.wdens[i] - mat.alpha +
                              mat.beta / prob.tau * dz) / 3.0;
        for (int k = 0; k < 3; ++k) {
            out[tri[k]] += c.area[i] * (sp2 * (gx * g[2 * k] + gy * g[2 * k + 1]) + third);
        }
    }
}

}  // namespace

double incremental_energy(const IncrementalDamageProblem& prob, const ScalarField& z) {
    return cached_energy(prob, make_cache(prob), z);
}

ScalarField incremental_gradient(const IncrementalDamageProblem& prob, const ScalarField& z) {
    ScalarField out;
    cached_gradient(prob, make_cache(prob), z, out);
    return out;
}

std::pair<ScalarField, ComplementarityReport> solve_damage_step(
    const IncrementalDamageProblem& prob) {
    const Mesh& mesh = *prob.mesh;
    const ScalarField& zp = *prob.z_prev;
    const StepCache cache = make_cache(prob);

    std::vector<int> free_nodes;
    for (int n = 0; n < mesh.num_nodes(); ++n) {
        if (prob.region->node_active(n)) free_nodes.push_back(n);
    }

    auto project = [&](ScalarField& x) {
        for (int n : free_nodes) x[n] = std::clamp(x[n], 0.0, zp[n]);
    };
    auto pg_norm = [&](const ScalarField& x, const std::vector<double>& grad) {
        double m = 0.0;
        for (int n : free_nodes) {
            const double moved = std::clamp(x[n] - grad[n], 0.0, zp[n]);
            m = std::max(m, std::abs(x[n] - moved));
        }
        return m;
    };

    ScalarField x = zp;
    project(x);
    std::vector<double> grad, grad_new;
    cached_gradient(prob, cache, x, grad);
    double fx = cached_energy(prob, cache, x);

    // Nonmonotone Armijo reference over a short history.
    constexpr int kHistory = 10;
    constexpr double kArmijo = 1e-4;
    std::vector<double> history = {fx};

    ComplementarityReport report;
    double step = 1.0 / (pg_norm(x, grad) + 1.0);
    ScalarField xt(x.size());
    int it = 0;
    for (;; ++it) {
        const double res = pg_norm(x, grad);
        if (res <= prob.kkt_tol) {
            report.stationarity_residual = res;
            break;
        }
        if (it >= prob.max_iterations) {
            throw std::runtime_error("damage: no convergence in " +
                                     std::to_string(prob.max_iterations) +
                                     " iterations, projected gradient " + std::to_string(res));
        }

        const double fref = *std::max_element(history.begin(), history.end());
        double t = std::clamp(step, 1e-12, 1e12);
        double ft = 0.0;
        for (;;) {
            xt = x;
            for (int n : free_nodes) xt[n] = std::clamp(x[n] - t * grad[n], 0.0, zp[n]);
            double gdx = 0.0;
            for (int n : free_nodes) gdx += grad[n] * (xt[n] - x[n]);
            ft = cached_energy(prob, cache, xt);
            if (ft <= fref + kArmijo * gdx + 1e-15 * (1.0 + std::abs(fref))) break;
            t *= 0.5;
            if (t < 1e-18) break;
        }

        cached_gradient(prob, cache, xt, grad_new);
        double dxdx = 0.0, dxdg = 0.0;
        for (int n : free_nodes) {
            const double dx = xt[n] - x[n];
            const double dg = grad_new[n] - grad[n];
            dxdx += dx * dx;
            dxdg += dx * dg;
        }
        step = dxdg > 0.0 ? dxdx / dxdg : t * 2.0;

        x.swap(xt);
        grad.swap(grad_new);
        fx = ft;
        history.push_back(fx);
        if (static_cast<int>(history.size()) > kHistory) history.erase(history.begin());
    }

    report.iterations = it;
    report.multiplier.assign(mesh.num_nodes(), 0.0);
    double gap = 0.0;
    for (int n : free_nodes) {
        if (x[n] <= prob.theta_z) {
            report.multiplier[n] = std::max(grad[n], 0.0);
            gap = std::max(gap, std::abs(report.multiplier[n] * x[n]));
        }
    }
    report.complementarity_gap = gap;
    return {std::move(x), report};
}

double vi_residual(const IncrementalDamageProblem& prob, const ScalarField& z) {
    const ScalarField grad = incremental_gradient(prob, z);
    double res = 0.0;
    for (int n = 0; n < prob.mesh->num_nodes(); ++n) {
        if (!prob.region->node_active(n)) continue;
        if (z[n] > prob.theta_z) {
            res = std::max(res, grad[n]);
        } else {
            res = std::max(res, std::abs(std::max(grad[n], 0.0) * z[n]));
        }
    }
    return std::max(res, 0.0);
}

}  // namespace codam
