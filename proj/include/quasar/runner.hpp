#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "quasar/core.hpp"
#include "quasar/env.hpp"
#include "quasar/glm.hpp"

namespace quasar {

/// Step-size schedule: either a constant alpha or alpha = c/sqrt(T).
struct StepSizePolicy {
    enum class Kind { constant, inverse_sqrt_T };
    Kind kind = Kind::constant;
    double alpha = 0.0;
    double c_scalar = 0.0;

    static StepSizePolicy constant(double alpha) {
        if (!(alpha > 0.0)) throw std::invalid_argument("StepSizePolicy: alpha must be > 0");
        StepSizePolicy p;
        p.kind = Kind::constant;
        p.alpha = alpha;
        return p;
    }
    static StepSizePolicy inverse_sqrt(double c_scalar) {
        if (!(c_scalar > 0.0)) throw std::invalid_argument("StepSizePolicy: c_scalar must be > 0");
        StepSizePolicy p;
        p.kind = Kind::inverse_sqrt_T;
        p.c_scalar = c_scalar;
        return p;
    }

    double alpha_for(std::size_t T) const {
        if (kind == Kind::constant) return alpha;
        return c_scalar / std::sqrt(static_cast<double>(T));
    }
};

/// Online iterate left the divergence guard; carries the offending step.
class DivergenceError : public std::runtime_error {
public:
    DivergenceError(std::size_t step, const std::string& what)
        : std::runtime_error("divergence at step " + std::to_string(step) + ": " + what), step_(step) {}
    std::size_t step() const { return step_; }

private:
    std::size_t step_;
};

inline Vector ogd_step(const Vector& w, const Vector& grad_est, double alpha) {
    if (!(alpha > 0.0)) throw std::invalid_argument("ogd_step: alpha must be > 0");
    return add_scaled(w, -alpha, grad_est);
}

inline Vector projected_ogd_step(const Vector& w, const Vector& grad_est, double alpha,
                                 const BallRegion& region) {
    return project_ball(ogd_step(w, grad_est, alpha), region);
}

/// Non-iterate settings of one online run, kept for reproducibility.
struct RunSettings {
    StepSizePolicy policy;
    std::optional<BallRegion> region;
    bool noisy = false;
    std::size_t eval_m = 1;
    std::uint64_t seed = 0;
};

/// Per-step trajectory of one online run.
struct RunRecord {
    std::vector<Vector> iterates;         // w_1..w_T
    std::vector<double> per_step_regret;  // fresh-sample estimate at w_t
    std::vector<double> cum_regret;       // prefix sums of per_step_regret
    std::vector<double> dist_to_opt;      // ||w_t - wstar_t||
    std::vector<double> delta_estimates;  // gradient-error estimates
    std::vector<char> in_basin;           // ReLU basin membership per step
    EnvTrace env;
    RunSettings settings;
    double alpha_used = 0.0;
    double max_input_sq = 0.0;  // empirical max ||x||^2 over train+eval samples
};

namespace detail {

inline double max_input_sq_of(const SampleBatch& batch) {
    double m = 0.0;
    for (const Vector& x : batch.inputs) m = std::max(m, squared_norm(x));
    return m;
}

}  // namespace detail

// Substream tags for mix_seed. One run seed fans out into the init draw plus
// one train and one eval stream per step.
inline constexpr std::uint64_t kInitStreamTag = 0;
inline std::uint64_t train_stream_tag(std::size_t t) { return 1 + 2 * static_cast<std::uint64_t>(t); }
inline std::uint64_t eval_stream_tag(std::size_t t) { return 2 + 2 * static_cast<std::uint64_t>(t); }

/// Runs the online loop over the problem's horizon: per step, draw a training
/// batch, take a (projected) gradient step, and estimate the instantaneous
/// regret on an independent fresh noiseless batch of size eval_m.
///
/// The iterate is initialized at 0.01*zeta with zeta ~ N(0, I_n) unless
/// w1_override is given. Aborts with DivergenceError if an iterate becomes
/// non-finite or its norm exceeds 1e6 times the initial scale.
inline RunRecord run_online(const GlmProblem& p, const StepSizePolicy& policy,
                            const std::optional<BallRegion>& region, SeededRng& rng, bool noisy,
                            std::size_t eval_m, const std::optional<Vector>& w1_override = std::nullopt) {
    p.validate();
    if (eval_m < 1) throw std::invalid_argument("run_online: eval_m must be >= 1");
    const std::size_t T = p.horizon();
    if (T < 1) throw std::invalid_argument("run_online: empty true-parameter sequence");
    const std::uint64_t run_seed = rng.seed();
    const double alpha = policy.alpha_for(T);

    RunRecord rec;
    rec.settings = RunSettings{policy, region, noisy, eval_m, run_seed};
    rec.alpha_used = alpha;
    rec.env.true_params = p.true_params;
    for (std::size_t t = 0; t + 1 < T; ++t) {
        rec.env.per_step_drift.push_back(distance(p.true_params[t], p.true_params[t + 1]));
        rec.env.path_variation_VT += rec.env.per_step_drift.back();
    }

    Vector w;
    if (w1_override) {
        if (w1_override->size() != p.dim) throw std::invalid_argument("run_online: w1 dimension mismatch");
        w = *w1_override;
    } else {
        SeededRng init_rng(mix_seed(run_seed, kInitStreamTag));
        w = scaled(gaussian_vector(init_rng, p.dim), 0.01);
    }
    if (region) w = project_ball(w, *region);
    const double guard = 1e6 * std::max(1.0, norm(w));

    GlmProblem eval_p = p;
    eval_p.sample_count = eval_m;
    eval_p.label_noise_std = 0.0;

    rec.iterates.reserve(T);
    double cum = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
        SeededRng train_rng(mix_seed(run_seed, train_stream_tag(t)));
        const SampleBatch batch = sample_batch(p, t, train_rng, noisy);
        rec.max_input_sq = std::max(rec.max_input_sq, detail::max_input_sq_of(batch));

        SeededRng eval_rng(mix_seed(run_seed, eval_stream_tag(t)));
        const SampleBatch eval_batch = sample_batch(eval_p, t, eval_rng, false);
        rec.max_input_sq = std::max(rec.max_input_sq, detail::max_input_sq_of(eval_batch));

        const double regret_t = empirical_loss(p.activation, w, eval_batch) -
                                empirical_loss(p.activation, p.true_params[t], eval_batch);
        cum += regret_t;
        rec.per_step_regret.push_back(regret_t);
        rec.cum_regret.push_back(cum);
        rec.dist_to_opt.push_back(distance(w, p.true_params[t]));
        rec.in_basin.push_back(relu_basin_contains(p.true_params[t], w) ? 1 : 0);
        rec.delta_estimates.push_back(p.sample_count >= 2 ? estimate_delta(p.activation, w, batch) : 0.0);
        rec.iterates.push_back(w);

        const Vector grad = empirical_gradient(p.activation, w, batch);
        w = region ? projected_ogd_step(w, grad, alpha, *region) : ogd_step(w, grad, alpha);
        if (!is_finite(w) || norm(w) > guard) {
            throw DivergenceError(t + 2, "iterate norm " + std::to_string(norm(w)) + " exceeds guard " +
                                             std::to_string(guard));
        }
    }
    return rec;
}

}  // namespace quasar
