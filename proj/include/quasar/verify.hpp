#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "quasar/core.hpp"
#include "quasar/env.hpp"
#include "quasar/format.hpp"
#include "quasar/glm.hpp"
#include "quasar/theory.hpp"

namespace quasar {

struct CheckViolation {
    std::size_t point_index = 0;
    double lhs = 0.0;
    double rhs = 0.0;
    double margin = 0.0;  // lhs - rhs
};

/// Outcome of one numerical verification. passed is true exactly when the
/// violation list is empty; a check whose preconditions do not hold is
/// reported with applicable = false instead of failing.
struct CheckReport {
    std::string check_name;
    std::size_t points_tested = 0;
    std::vector<CheckViolation> violations;
    double tolerance_used = 0.0;
    bool passed = false;
    bool applicable = true;
    std::size_t points_excluded = 0;
    std::string note;
};

/// Line-oriented serialization: one tab-separated line per violation followed
/// by a summary line.
inline std::string to_tsv(const CheckReport& r) {
    std::string out;
    for (const CheckViolation& v : r.violations) {
        out += r.check_name + "\t" + std::to_string(v.point_index) + "\t" + format_double(v.lhs) + "\t" +
               format_double(v.rhs) + "\t" + format_double(v.margin) + "\n";
    }
    out += r.check_name + "\tsummary\tpoints=" + std::to_string(r.points_tested) +
           "\tviolations=" + std::to_string(r.violations.size()) + "\ttol=" + format_double(r.tolerance_used) +
           "\t" + (!r.applicable ? "not_applicable" : (r.passed ? "passed" : "failed"));
    if (!r.note.empty()) out += "\t" + r.note;
    out += "\n";
    return out;
}

/// Function oracle a check runs against: loss value, gradient, the minimizer
/// the inequalities are anchored at, and the constants certificate.
///
/// linear_se, when set, returns the standard error of the Monte-Carlo
/// estimate of coef_value*f(w) + <coef_grad, grad f(w)>; checks widen their
/// tolerance by three of these standard errors. Exact oracles leave it null.
struct OracleFn {
    std::function<double(const Vector&)> value;
    std::function<Vector(const Vector&)> gradient;
    Vector minimizer;
    QuasarConstants constants;
    std::function<double(const Vector& w, double coef_value, const Vector& coef_grad)> linear_se;
};

/// Where and how many points a check samples. Points are uniform in a ball
/// (the ReLU basin is the ball of radius ||wstar|| around wstar); an optional
/// filter rejects points, which are counted separately.
struct SamplingSpec {
    BallRegion ball;
    std::size_t count = 1000;
    std::uint64_t seed = 0;
    std::function<bool(const Vector&)> filter;

    static SamplingSpec in_ball(BallRegion region, std::size_t count, std::uint64_t seed) {
        SamplingSpec s;
        s.ball = std::move(region);
        s.count = count;
        s.seed = seed;
        return s;
    }
    static SamplingSpec in_relu_basin(const Vector& wstar, std::size_t count, std::uint64_t seed) {
        return in_ball(BallRegion(wstar, norm(wstar)), count, seed);
    }
};

inline Vector uniform_in_ball(SeededRng& rng, const BallRegion& region) {
    const std::size_t n = region.center.size();
    Vector dir = gaussian_vector(rng, n);
    const double len = norm(dir);
    const double r = region.radius * std::pow(rng.uniform(), 1.0 / static_cast<double>(n));
    return add_scaled(region.center, len > 0.0 ? r / len : 0.0, dir);
}

struct SampledPoints {
    std::vector<Vector> points;
    std::size_t excluded = 0;
};

inline SampledPoints sample_points(const SamplingSpec& spec) {
    SampledPoints out;
    out.points.reserve(spec.count);
    SeededRng rng(spec.seed);
    std::size_t attempts = 0;
    const std::size_t max_attempts = 1000 * (spec.count + 1);
    while (out.points.size() < spec.count && attempts < max_attempts) {
        ++attempts;
        Vector w = uniform_in_ball(rng, spec.ball);
        if (spec.filter && !spec.filter(w)) {
            ++out.excluded;
            continue;
        }
        out.points.push_back(std::move(w));
    }
    if (out.points.size() < spec.count) {
        throw std::runtime_error("sample_points: filter rejected too many points (" +
                                 std::to_string(out.excluded) + " exclusions)");
    }
    return out;
}

namespace detail {

inline double check_tol(const OracleFn& oracle, const Vector& w, double base_tol, double coef_value,
                        const Vector& coef_grad) {
    if (!oracle.linear_se) return base_tol;
    return base_tol + 3.0 * oracle.linear_se(w, coef_value, coef_grad);
}

}  // namespace detail

/// f(wstar) >= f(w) + (1/rho)<grad f(w), wstar - w> - tol at every sampled point.
inline CheckReport check_quasar(const OracleFn& oracle, double rho, const SamplingSpec& spec, double tol) {
    if (!(rho > 0.0) || rho > 1.0) throw std::invalid_argument("check_quasar: rho must lie in (0,1]");
    CheckReport rep;
    rep.check_name = "quasar";
    rep.tolerance_used = tol;
    const SampledPoints pts = sample_points(spec);
    rep.points_excluded = pts.excluded;
    const double f_star = oracle.value(oracle.minimizer);
    for (std::size_t i = 0; i < pts.points.size(); ++i) {
        const Vector& w = pts.points[i];
        const Vector dir = scaled(sub(oracle.minimizer, w), 1.0 / rho);
        const double lhs = oracle.value(w) + dot(oracle.gradient(w), dir);
        ++rep.points_tested;
        if (lhs > f_star + detail::check_tol(oracle, w, tol, 1.0, dir)) {
            rep.violations.push_back({i, lhs, f_star, lhs - f_star});
        }
    }
    rep.passed = rep.violations.empty();
    return rep;
}

/// f(wstar) >= f(w) + (1/rho)<grad f(w), wstar - w> + (mu/2)||wstar - w||^2 - tol.
inline CheckReport check_strong_quasar(const OracleFn& oracle, double rho, double mu,
                                       const SamplingSpec& spec, double tol) {
    if (!(rho > 0.0) || rho > 1.0) throw std::invalid_argument("check_strong_quasar: rho must lie in (0,1]");
    if (!(mu > 0.0)) throw std::invalid_argument("check_strong_quasar: mu must be > 0");
    CheckReport rep;
    rep.check_name = "strong_quasar";
    rep.tolerance_used = tol;
    const SampledPoints pts = sample_points(spec);
    rep.points_excluded = pts.excluded;
    const double f_star = oracle.value(oracle.minimizer);
    for (std::size_t i = 0; i < pts.points.size(); ++i) {
        const Vector& w = pts.points[i];
        const Vector gap = sub(oracle.minimizer, w);
        const Vector dir = scaled(gap, 1.0 / rho);
        const double lhs = oracle.value(w) + dot(oracle.gradient(w), dir) + 0.5 * mu * squared_norm(gap);
        ++rep.points_tested;
        if (lhs > f_star + detail::check_tol(oracle, w, tol, 1.0, dir)) {
            rep.violations.push_back({i, lhs, f_star, lhs - f_star});
        }
    }
    rep.passed = rep.violations.empty();
    return rep;
}

/// ||grad f(w)||^2 <= Gamma*(f(w) - f(wstar)) + tol.
inline CheckReport check_weak_smoothness(const OracleFn& oracle, double gamma_ws, const SamplingSpec& spec,
                                         double tol) {
    if (!(gamma_ws > 0.0)) throw std::invalid_argument("check_weak_smoothness: gamma_ws must be > 0");
    CheckReport rep;
    rep.check_name = "weak_smoothness";
    rep.tolerance_used = tol;
    const SampledPoints pts = sample_points(spec);
    rep.points_excluded = pts.excluded;
    const double f_star = oracle.value(oracle.minimizer);
    for (std::size_t i = 0; i < pts.points.size(); ++i) {
        const Vector& w = pts.points[i];
        const Vector g = oracle.gradient(w);
        const double lhs = squared_norm(g);
        const double rhs = gamma_ws * (oracle.value(w) - f_star);
        ++rep.points_tested;
        if (lhs > rhs + detail::check_tol(oracle, w, tol, -gamma_ws, scaled(g, 2.0))) {
            rep.violations.push_back({i, lhs, rhs, lhs - rhs});
        }
    }
    rep.passed = rep.violations.empty();
    return rep;
}

/// Error bound ||wstar - w||^2 <= (4/(rho*mu)^2)||grad f(w)||^2 + tol and
/// quadratic growth f(w) - f(wstar) >= ((rho*mu)^2/(4*Gamma))||w - wstar||^2 - tol.
inline CheckReport check_error_bound_and_qg(const OracleFn& oracle, double rho, double mu, double gamma_ws,
                                            const SamplingSpec& spec, double tol) {
    if (!(rho > 0.0) || rho > 1.0) throw std::invalid_argument("check_error_bound_and_qg: rho in (0,1]");
    if (!(mu > 0.0) || !(gamma_ws > 0.0)) {
        throw std::invalid_argument("check_error_bound_and_qg: mu and gamma_ws must be > 0");
    }
    CheckReport rep;
    rep.check_name = "error_bound_and_qg";
    rep.tolerance_used = tol;
    const SampledPoints pts = sample_points(spec);
    rep.points_excluded = pts.excluded;
    const double f_star = oracle.value(oracle.minimizer);
    const double r2m2 = rho * rho * mu * mu;
    for (std::size_t i = 0; i < pts.points.size(); ++i) {
        const Vector& w = pts.points[i];
        const Vector g = oracle.gradient(w);
        const double dist_sq = squared_norm(sub(oracle.minimizer, w));

        const double eb_rhs = 4.0 / r2m2 * squared_norm(g);
        if (dist_sq > eb_rhs + detail::check_tol(oracle, w, tol, 0.0, scaled(g, 8.0 / r2m2))) {
            rep.violations.push_back({i, dist_sq, eb_rhs, dist_sq - eb_rhs});
        }

        const double qg_lhs = r2m2 / (4.0 * gamma_ws) * dist_sq;
        const double qg_rhs = oracle.value(w) - f_star;
        if (qg_lhs > qg_rhs + detail::check_tol(oracle, w, tol, 1.0, Vector(w.size(), 0.0))) {
            rep.violations.push_back({i, qg_lhs, qg_rhs, qg_lhs - qg_rhs});
        }
        ++rep.points_tested;
    }
    rep.passed = rep.violations.empty();
    return rep;
}

/// From each start point, runs n_steps gradient-descent steps with the
/// oracle's gradient and asserts the per-step squared-distance contraction
/// ||w+ - wstar||^2 <= gamma*||w - wstar||^2 with gamma from the constants.
/// Violations are indexed start_index*n_steps + step.
inline CheckReport check_offline_contraction(const OracleFn& oracle, double alpha, const SamplingSpec& spec,
                                             std::size_t n_steps, double tol) {
    const double gamma = gamma_contraction(alpha, oracle.constants);  // validates alpha range
    CheckReport rep;
    rep.check_name = "offline_contraction";
    rep.tolerance_used = tol;
    const SampledPoints pts = sample_points(spec);
    rep.points_excluded = pts.excluded;
    for (std::size_t i = 0; i < pts.points.size(); ++i) {
        Vector w = pts.points[i];
        for (std::size_t s = 0; s < n_steps; ++s) {
            const double dist_sq = squared_norm(sub(w, oracle.minimizer));
            if (dist_sq < 1e-24) break;  // converged to the optimum
            const Vector g = oracle.gradient(w);
            const Vector w_next = add_scaled(w, -alpha, g);
            const double ratio = squared_norm(sub(w_next, oracle.minimizer)) / dist_sq;
            ++rep.points_tested;
            const Vector se_dir = scaled(sub(w_next, oracle.minimizer), 2.0 * alpha / dist_sq);
            if (ratio > gamma + detail::check_tol(oracle, w, tol, 0.0, se_dir)) {
                rep.violations.push_back({i * n_steps + s, ratio, gamma, ratio - gamma});
            }
            w = w_next;
        }
    }
    rep.passed = rep.violations.empty();
    return rep;
}

/// Central finite differences of the oracle value against its analytic
/// gradient; the relative error is measured vector-wise.
inline CheckReport fd_gradient_check(const OracleFn& oracle, const SamplingSpec& spec, double h, double tol) {
    if (!(h > 0.0)) throw std::invalid_argument("fd_gradient_check: h must be > 0");
    CheckReport rep;
    rep.check_name = "fd_gradient";
    rep.tolerance_used = tol;
    const SampledPoints pts = sample_points(spec);
    rep.points_excluded = pts.excluded;
    for (std::size_t i = 0; i < pts.points.size(); ++i) {
        Vector w = pts.points[i];
        const Vector g = oracle.gradient(w);
        Vector fd(w.size());
        for (std::size_t j = 0; j < w.size(); ++j) {
            const double orig = w[j];
            w[j] = orig + h;
            const double f_plus = oracle.value(w);
            w[j] = orig - h;
            const double f_minus = oracle.value(w);
            w[j] = orig;
            fd[j] = (f_plus - f_minus) / (2.0 * h);
        }
        const double denom = std::max({norm(g), norm(fd), 1e-12});
        const double rel = distance(fd, g) / denom;
        ++rep.points_tested;
        if (rel > tol) rep.violations.push_back({i, rel, tol, rel - tol});
    }
    rep.passed = rep.violations.empty();
    return rep;
}

/// Monte-Carlo population oracle for a GLM loss built on a fixed shared
/// sample pool (common random numbers across evaluation points). The loss at
/// the minimizer is exactly zero, so only the at-w statistics carry noise.
class GlmMcOracle {
public:
    GlmMcOracle(const Activation& act, Vector wstar, std::size_t pool_size, SeededRng& rng,
                bool rescale_inputs_to_unit = false)
        : data_(std::make_shared<Data>()) {
        if (pool_size < 2) throw std::invalid_argument("GlmMcOracle: pool_size must be >= 2");
        data_->act = act;
        data_->wstar = std::move(wstar);
        data_->pool.reserve(pool_size);
        for (std::size_t i = 0; i < pool_size; ++i) {
            data_->pool.push_back(gaussian_vector(rng, data_->wstar.size()));
        }
        if (rescale_inputs_to_unit) {
            double max_norm = 0.0;
            for (const Vector& x : data_->pool) max_norm = std::max(max_norm, norm(x));
            if (max_norm > 0.0) {
                for (Vector& x : data_->pool) x = scaled(x, 1.0 / max_norm);
            }
        }
        for (const Vector& x : data_->pool) {
            data_->max_input_sq = std::max(data_->max_input_sq, squared_norm(x));
        }
        data_->labels.reserve(pool_size);
        for (const Vector& x : data_->pool) {
            data_->labels.push_back(activation_eval(act, dot(data_->wstar, x)));
        }
    }

    double max_input_sq() const { return data_->max_input_sq; }
    const Vector& wstar() const { return data_->wstar; }

    double value(const Vector& w) const {
        const auto& d = *data_;
        double s = 0.0;
        for (std::size_t i = 0; i < d.pool.size(); ++i) {
            const double r = activation_eval(d.act, dot(w, d.pool[i])) - d.labels[i];
            s += r * r;
        }
        return s / (2.0 * static_cast<double>(d.pool.size()));
    }

    Vector gradient(const Vector& w) const {
        const auto& d = *data_;
        Vector g(w.size(), 0.0);
        for (std::size_t i = 0; i < d.pool.size(); ++i) {
            const double z = dot(w, d.pool[i]);
            const double coef = (activation_eval(d.act, z) - d.labels[i]) * clarke_subgrad(d.act, z);
            for (std::size_t j = 0; j < g.size(); ++j) g[j] += coef * d.pool[i][j];
        }
        const double inv = 1.0 / static_cast<double>(d.pool.size());
        for (double& v : g) v *= inv;
        return g;
    }

    /// Standard error of coef_value*f(w) + <coef_grad, grad f(w)> over the pool.
    double linear_se(const Vector& w, double coef_value, const Vector& coef_grad) const {
        const auto& d = *data_;
        const std::size_t P = d.pool.size();
        double sum = 0.0, sum_sq = 0.0;
        for (std::size_t i = 0; i < P; ++i) {
            const double z = dot(w, d.pool[i]);
            const double res = activation_eval(d.act, z) - d.labels[i];
            const double loss_i = 0.5 * res * res;
            const double grad_coef = res * clarke_subgrad(d.act, z);
            const double s = coef_value * loss_i + grad_coef * dot(coef_grad, d.pool[i]);
            sum += s;
            sum_sq += s * s;
        }
        const double mean = sum / static_cast<double>(P);
        const double var = std::max(0.0, (sum_sq - static_cast<double>(P) * mean * mean) /
                                             static_cast<double>(P - 1));
        return std::sqrt(var / static_cast<double>(P));
    }

    OracleFn to_oracle(QuasarConstants constants) const {
        OracleFn fn;
        auto self = *this;  // shares the pool
        fn.value = [self](const Vector& w) { return self.value(w); };
        fn.gradient = [self](const Vector& w) { return self.gradient(w); };
        fn.linear_se = [self](const Vector& w, double cv, const Vector& cg) {
            return self.linear_se(w, cv, cg);
        };
        fn.minimizer = data_->wstar;
        fn.constants = std::move(constants);
        return fn;
    }

private:
    struct Data {
        Activation act;
        Vector wstar;
        std::vector<Vector> pool;
        std::vector<double> labels;
        double max_input_sq = 0.0;
    };
    std::shared_ptr<Data> data_;
};

/// Options for the basin-persistence study. Trajectories start uniformly in
/// the ball of radius init_radius_frac*||wstar_1|| around wstar_1.
struct BasinPersistenceOptions {
    std::size_t trials = 20;
    double tau = 0.01;
    double init_radius_frac = 1.0;
};

/// Runs online trajectories of the ReLU problem and measures the fraction of
/// (trial, step) pairs whose iterate stays in the basin of attraction.
/// Preconditions on the step size are argument errors; environment conditions
/// (per-step drift within the certified bound, true-parameter norm above the
/// certified minimum at the measured gradient-error level) make the check
/// not-applicable when violated. rt1_cond_log, when given, receives the raw
/// certified drift headroom per (trial, step) for diagnostics.
inline CheckReport check_relu_basin_persistence(const GlmProblem& p, double alpha, const QuasarConstants& k,
                                                SeededRng& rng, const BasinPersistenceOptions& opts,
                                                std::vector<double>* rt1_cond_log = nullptr) {
    p.validate();
    if (p.activation.kind != ActivationKind::relu) {
        throw std::invalid_argument("check_relu_basin_persistence: problem must use the ReLU activation");
    }
    detail::require_rho(k);
    const double c = detail::require_value(k.input_bound_c, "input_bound_c");
    if (!(opts.tau > 0.0) || !(opts.tau < 1.0)) {
        throw std::invalid_argument("check_relu_basin_persistence: tau must lie in (0,1)");
    }
    if (!(alpha > 0.0) || alpha > k.rho / (2.0 * c)) {
        throw std::range_error("check_relu_basin_persistence: alpha " + std::to_string(alpha) +
                               " outside (0, rho/(2c)] = (0, " + std::to_string(k.rho / (2.0 * c)) + "]");
    }

    CheckReport rep;
    rep.check_name = "relu_basin_persistence";
    rep.tolerance_used = opts.tau;

    const std::size_t T = p.horizon();
    for (std::size_t t = 0; t + 1 < T; ++t) {
        const double drift = distance(p.true_params[t], p.true_params[t + 1]);
        const double allowed = relu_max_drift(alpha, k, norm(p.true_params[t]));
        if (drift > allowed) {
            rep.applicable = false;
            rep.note = "precondition unmet: drift " + format_double(drift) + " at step " + std::to_string(t + 1) +
                       " exceeds certified bound " + format_double(allowed);
            rep.passed = true;  // not a failure, the certificate does not apply
            return rep;
        }
    }

    const double gamma = 1.0 - alpha * k.rho / 2.0;
    const bool noisy = p.label_noise_std > 0.0;
    std::size_t in_basin = 0, total = 0, out_of_basin = 0;
    double min_norm_worst_margin = std::numeric_limits<double>::infinity();
    for (std::size_t trial = 0; trial < opts.trials; ++trial) {
        const std::uint64_t trial_seed = mix_seed(rng.seed(), 1000 + trial);
        SeededRng init_rng(mix_seed(trial_seed, 0));
        const Vector& ws1 = p.true_params[0];
        Vector w = uniform_in_ball(init_rng, BallRegion(ws1, opts.init_radius_frac * norm(ws1)));
        for (std::size_t t = 0; t < T; ++t) {
            const Vector& wstar = p.true_params[t];
            ++total;
            if (relu_basin_contains(wstar, w)) {
                ++in_basin;
            } else {
                ++out_of_basin;
            }
            SeededRng batch_rng(mix_seed(trial_seed, 1 + t));
            const SampleBatch batch = sample_batch(p, t, batch_rng, noisy);
            const double delta_hat = p.sample_count >= 2 ? estimate_delta(p.activation, w, batch) : 0.0;
            const double required_norm = relu_min_norm(k, delta_hat, opts.tau);
            min_norm_worst_margin = std::min(min_norm_worst_margin, norm(wstar) - required_norm);
            if (norm(wstar) < required_norm) {
                rep.applicable = false;
                rep.note = "precondition unmet: ||wstar|| " + format_double(norm(wstar)) + " at step " +
                           std::to_string(t + 1) + " below certified minimum " + format_double(required_norm) +
                           " for measured delta " + format_double(delta_hat);
                rep.passed = true;
                return rep;
            }
            if (rt1_cond_log) {
                const double e = delta_hat;
                const double wn = norm(wstar);
                const double numer = (1.0 - gamma) * wn * wn - 2.0 * alpha * std::sqrt(gamma) * wn * e -
                                     alpha * alpha * e * e;
                const double denom = 2.0 * (std::sqrt(gamma) + 1.0) * wn + 2.0 * alpha * e;
                rt1_cond_log->push_back(denom > 0.0 ? numer / denom : 0.0);
            }
            const Vector grad = empirical_gradient(p.activation, w, batch);
            w = add_scaled(w, -alpha, grad);
        }
    }
    rep.points_tested = total;
    const double fraction = total > 0 ? static_cast<double>(in_basin) / static_cast<double>(total) : 0.0;
    rep.note = "in_basin_fraction=" + format_double(fraction) +
               " min_norm_margin=" + format_double(min_norm_worst_margin);
    if (fraction < 1.0 - opts.tau) {
        rep.violations.push_back({0, 1.0 - fraction, opts.tau, (1.0 - fraction) - opts.tau});
        rep.passed = false;
    } else {
        rep.passed = true;
        if (out_of_basin > 0) rep.note += " out_of_basin=" + std::to_string(out_of_basin);
    }
    return rep;
}

}  // namespace quasar
