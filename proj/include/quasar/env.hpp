#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "quasar/core.hpp"
#include "quasar/glm.hpp"

namespace quasar {

/// Drifting-environment parameters. The true parameter starts at
/// w_1 ~ N(0, I_n) and moves by (drift_scale / t^drift_exponent) * u_t with
/// u_t ~ N(0, I_n) at each step.
struct DriftConfig {
    std::size_t horizon = 1;
    std::size_t dim = 1;
    double drift_scale = 0.01;
    double drift_exponent = 0.5;
    std::uint64_t seed = 0;

    void validate() const {
        if (horizon < 1) throw std::invalid_argument("DriftConfig: horizon must be >= 1");
        if (dim < 1) throw std::invalid_argument("DriftConfig: dim must be >= 1");
        if (!(drift_scale >= 0.0)) throw std::invalid_argument("DriftConfig: drift_scale must be >= 0");
    }
};

/// Realized true-parameter trajectory with per-step drift bookkeeping.
struct EnvTrace {
    std::vector<Vector> true_params;
    std::vector<double> per_step_drift;  // horizon-1 entries
    double path_variation_VT = 0.0;
};

inline EnvTrace generate_env(const DriftConfig& cfg, SeededRng& rng) {
    cfg.validate();
    EnvTrace trace;
    trace.true_params.reserve(cfg.horizon);
    trace.true_params.push_back(gaussian_vector(rng, cfg.dim));
    trace.per_step_drift.reserve(cfg.horizon > 0 ? cfg.horizon - 1 : 0);
    for (std::size_t t = 1; t < cfg.horizon; ++t) {
        const double coef = cfg.drift_scale / std::pow(static_cast<double>(t), cfg.drift_exponent);
        Vector next = trace.true_params.back();
        if (coef != 0.0) {
            const Vector u = gaussian_vector(rng, cfg.dim);
            next = add_scaled(next, coef, u);
        }
        trace.per_step_drift.push_back(distance(next, trace.true_params.back()));
        trace.path_variation_VT += trace.per_step_drift.back();
        trace.true_params.push_back(std::move(next));
    }
    return trace;
}

/// m i.i.d. samples for step t (0-based): inputs ~ N(0, I_n), labels
/// sigma<wstar_t, x> plus, in the noisy setting, N(0, label_noise_std^2).
inline SampleBatch sample_batch(const GlmProblem& p, std::size_t t, SeededRng& rng, bool noisy) {
    if (t >= p.horizon()) throw std::invalid_argument("sample_batch: t out of range");
    const Vector& wstar = p.true_params[t];
    SampleBatch batch;
    batch.inputs.reserve(p.sample_count);
    batch.labels.reserve(p.sample_count);
    for (std::size_t i = 0; i < p.sample_count; ++i) {
        Vector x = gaussian_vector(rng, p.dim);
        double y = activation_eval(p.activation, dot(wstar, x));
        if (noisy && p.label_noise_std > 0.0) y += rng.normal(0.0, p.label_noise_std);
        batch.inputs.push_back(std::move(x));
        batch.labels.push_back(y);
    }
    return batch;
}

/// Standard-error estimate of the stochastic gradient at w:
/// sqrt(trace of the per-sample-gradient covariance / m), the plug-in
/// delta_t used by the regret bounds. Reported as an estimate, not a
/// certified bound.
inline double estimate_delta(const Activation& a, const Vector& w, const SampleBatch& batch) {
    const std::size_t m = batch.size();
    if (m < 2) throw std::invalid_argument("estimate_delta: need at least 2 samples");
    const std::size_t n = w.size();
    Vector mean(n, 0.0);
    std::vector<Vector> grads;
    grads.reserve(m);
    for (std::size_t i = 0; i < m; ++i) {
        const double z = dot(w, batch.inputs[i]);
        const double coef = (activation_eval(a, z) - batch.labels[i]) * clarke_subgrad(a, z);
        Vector g(n);
        for (std::size_t j = 0; j < n; ++j) g[j] = coef * batch.inputs[i][j];
        for (std::size_t j = 0; j < n; ++j) mean[j] += g[j];
        grads.push_back(std::move(g));
    }
    for (double& v : mean) v /= static_cast<double>(m);
    double trace = 0.0;
    for (const Vector& g : grads) {
        for (std::size_t j = 0; j < n; ++j) {
            const double d = g[j] - mean[j];
            trace += d * d;
        }
    }
    trace /= static_cast<double>(m - 1);  // unbiased per-coordinate variance
    return std::sqrt(trace / static_cast<double>(m));
}

}  // namespace quasar
