#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <variant>
#include <vector>

#include "quasar/core.hpp"
#include "quasar/theory.hpp"

namespace quasar {

enum class ActivationKind { leaky_relu, logistic, relu };

/// Single-neuron activation. kappa is the negative-side slope and is
/// meaningful for leaky_relu only.
struct Activation {
    ActivationKind kind = ActivationKind::leaky_relu;
    double kappa = 1.0;

    static Activation leaky(double kappa) {
        if (!(kappa > 0.0) || kappa > 1.0) {
            throw std::invalid_argument("Activation::leaky: kappa must lie in (0,1]");
        }
        return Activation{ActivationKind::leaky_relu, kappa};
    }
    static Activation logistic() { return Activation{ActivationKind::logistic, 1.0}; }
    static Activation relu() { return Activation{ActivationKind::relu, 1.0}; }
};

inline double activation_eval(const Activation& a, double z) {
    switch (a.kind) {
        case ActivationKind::leaky_relu:
            return std::max(a.kappa * z, z);
        case ActivationKind::logistic:
            return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
        case ActivationKind::relu:
            return std::max(0.0, z);
    }
    throw std::logic_error("activation_eval: unknown kind");
}

/// Deterministic Clarke-subdifferential selection. At the kink z = 0 the
/// choice is the slope of the positive side for leaky ReLU (1) and of the
/// flat side for ReLU (0).
inline double clarke_subgrad(const Activation& a, double z) {
    switch (a.kind) {
        case ActivationKind::leaky_relu:
            return z < 0.0 ? a.kappa : 1.0;
        case ActivationKind::logistic: {
            const double s = activation_eval(a, z);
            return s * (1.0 - s);
        }
        case ActivationKind::relu:
            return z > 0.0 ? 1.0 : 0.0;
    }
    throw std::logic_error("clarke_subgrad: unknown kind");
}

/// m input/label pairs collected at one time step.
struct SampleBatch {
    std::vector<Vector> inputs;
    std::vector<double> labels;

    std::size_t size() const { return inputs.size(); }
};

/// Time-varying single-neuron regression problem: activation, drifting true
/// parameter sequence, per-step batch size, and label noise level.
struct GlmProblem {
    Activation activation;
    std::size_t dim = 0;
    std::vector<Vector> true_params;
    std::size_t sample_count = 1;
    double label_noise_std = 0.0;

    std::size_t horizon() const { return true_params.size(); }

    void validate() const {
        if (dim < 1) throw std::invalid_argument("GlmProblem: dim must be >= 1");
        if (sample_count < 1) throw std::invalid_argument("GlmProblem: sample_count must be >= 1");
        if (label_noise_std < 0.0) throw std::invalid_argument("GlmProblem: label_noise_std must be >= 0");
        for (const Vector& w : true_params) {
            if (w.size() != dim) throw std::invalid_argument("GlmProblem: true_params dimension mismatch");
        }
    }
};

/// (1/2m) sum_i (sigma<w, x_i> - y_i)^2
inline double empirical_loss(const Activation& a, const Vector& w, const SampleBatch& batch) {
    if (batch.size() == 0) throw std::invalid_argument("empirical_loss: empty batch");
    double s = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const double r = activation_eval(a, dot(w, batch.inputs[i])) - batch.labels[i];
        s += r * r;
    }
    return s / (2.0 * static_cast<double>(batch.size()));
}

/// (1/m) sum_i (sigma<w, x_i> - y_i) * g(<w, x_i>) * x_i, with g the Clarke
/// selection above evaluated at the current iterate's pre-activation.
inline Vector empirical_gradient(const Activation& a, const Vector& w, const SampleBatch& batch) {
    if (batch.size() == 0) throw std::invalid_argument("empirical_gradient: empty batch");
    Vector g(w.size(), 0.0);
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const double z = dot(w, batch.inputs[i]);
        const double coef = (activation_eval(a, z) - batch.labels[i]) * clarke_subgrad(a, z);
        const Vector& x = batch.inputs[i];
        for (std::size_t j = 0; j < g.size(); ++j) g[j] += coef * x[j];
    }
    const double inv_m = 1.0 / static_cast<double>(batch.size());
    for (double& v : g) v *= inv_m;
    return g;
}

/// Monte-Carlo estimate of the population gradient at w using n_mc fresh
/// noiseless samples from N(0, I_n). Standard error decays as 1/sqrt(n_mc).
inline Vector population_gradient_mc(const GlmProblem& p, std::size_t t, const Vector& w, SeededRng& rng,
                                     std::size_t n_mc) {
    if (n_mc < 1) throw std::invalid_argument("population_gradient_mc: n_mc must be >= 1");
    if (t >= p.horizon()) throw std::invalid_argument("population_gradient_mc: t out of range");
    const Vector& wstar = p.true_params[t];
    require_same_size(w, wstar, "population_gradient_mc");
    Vector g(w.size(), 0.0);
    for (std::size_t i = 0; i < n_mc; ++i) {
        const Vector x = gaussian_vector(rng, p.dim);
        const double z = dot(w, x);
        const double coef = (activation_eval(p.activation, z) - activation_eval(p.activation, dot(wstar, x))) *
                            clarke_subgrad(p.activation, z);
        for (std::size_t j = 0; j < g.size(); ++j) g[j] += coef * x[j];
    }
    const double inv = 1.0 / static_cast<double>(n_mc);
    for (double& v : g) v *= inv;
    return g;
}

/// Input-distribution quantities the certificates consume. For standard
/// Gaussian inputs the minimum covariance eigenvalue is 1 and beta is the
/// infimum of the planar density on the eps-ball; the squared-norm bound c
/// has to be measured empirically since the Gaussian is unbounded.
struct DistributionInfo {
    std::optional<double> min_eig_lambda;
    std::optional<double> input_sq_bound_c;
    std::optional<double> eps;
    std::optional<double> beta;

    static DistributionInfo standard_gaussian(double input_sq_bound_c, double eps = 1.0) {
        DistributionInfo d;
        d.min_eig_lambda = 1.0;
        d.input_sq_bound_c = input_sq_bound_c;
        d.eps = eps;
        d.beta = std::exp(-eps * eps / 2.0) / (2.0 * std::acos(-1.0));
        return d;
    }
};

/// Marker for the ReLU basin of attraction around the (known) true-parameter
/// sequence; the basin geometry is derived from the problem itself.
struct ReluBasinHint {};

using RegionHint = std::variant<BallRegion, ReluBasinHint>;

/// True iff w lies in the ReLU basin of wstar:
/// ||w - wstar||^2 <= ||wstar||^2 and ||w|| <= 2*||wstar||.
inline bool relu_basin_contains(const Vector& wstar, const Vector& w) {
    require_same_size(wstar, w, "relu_basin_contains");
    const double ws2 = squared_norm(wstar);
    return squared_norm(sub(w, wstar)) <= ws2 && squared_norm(w) <= 4.0 * ws2;
}

/// Certified constants for a GLM problem.
///   leaky ReLU: rho = kappa, mu = kappa*lambda, Gamma = 2c, K = 1, M = c*R
///   logistic (over a region of diameter R, ||x|| <= 1): rho = 2*exp(-R), Gamma = 1/8, K = 1/4
///   ReLU (over the basin): rho = eps^4*beta*sin^3(pi/8)/(8*sqrt(2)*c), mu = c, K = 1,
///                          M = max_t c*||wstar_t||
inline QuasarConstants derive_constants(const GlmProblem& p, const DistributionInfo& dist,
                                        const RegionHint& hint) {
    QuasarConstants k;
    switch (p.activation.kind) {
        case ActivationKind::leaky_relu: {
            const double lambda = detail::require_value(dist.min_eig_lambda, "min_eig_lambda");
            const double c = detail::require_value(dist.input_sq_bound_c, "input_sq_bound_c");
            const auto* ball = std::get_if<BallRegion>(&hint);
            if (!ball) throw std::invalid_argument("derive_constants: leaky ReLU expects a ball region hint");
            k.rho = p.activation.kappa;
            k.mu = p.activation.kappa * lambda;
            k.gamma_ws = 2.0 * c;
            k.lip_K = 1.0;
            k.eig_lambda = lambda;
            k.input_bound_c = c;
            k.grad_bound_M = c * ball->radius;
            return k;
        }
        case ActivationKind::logistic: {
            const auto* ball = std::get_if<BallRegion>(&hint);
            if (!ball) throw std::invalid_argument("derive_constants: logistic expects a ball region hint");
            const double R = ball->diameter();
            k.rho = 2.0 * std::exp(-R);
            k.gamma_ws = 1.0 / 8.0;
            k.lip_K = 0.25;
            k.input_bound_c = 1.0;
            return k;
        }
        case ActivationKind::relu: {
            if (!std::holds_alternative<ReluBasinHint>(hint)) {
                throw std::invalid_argument("derive_constants: ReLU expects the basin region hint");
            }
            const double c = detail::require_value(dist.input_sq_bound_c, "input_sq_bound_c");
            const double eps = detail::require_value(dist.eps, "eps");
            const double beta = detail::require_value(dist.beta, "beta");
            const double s = std::sin(std::acos(-1.0) / 8.0);
            k.rho = std::pow(eps, 4) * beta * s * s * s / (8.0 * std::sqrt(2.0) * c);
            k.mu = c;
            k.gamma_ws = 2.0 * c;  // K = 1
            k.lip_K = 1.0;
            k.input_bound_c = c;
            double max_norm = 0.0;
            for (const Vector& w : p.true_params) max_norm = std::max(max_norm, norm(w));
            k.grad_bound_M = c * max_norm;
            return k;
        }
    }
    throw std::logic_error("derive_constants: unknown activation");
}

/// Empirical audit that |g(z)| <= K near kinks and on random points, and
/// that |sigma(z) - sigma(z')| <= K|z - z'| on random pairs.
struct SubgradBoundReport {
    struct Violation {
        double z = 0.0;
        double z2 = 0.0;
        double observed = 0.0;
    };
    std::size_t points_checked = 0;
    std::size_t pairs_checked = 0;
    std::vector<Violation> subgrad_violations;
    std::vector<Violation> lipschitz_violations;
    bool passed = false;
};

inline SubgradBoundReport subgrad_bound_check(const Activation& a, double K, std::size_t n_samples,
                                              SeededRng& rng) {
    if (!(K > 0.0)) throw std::invalid_argument("subgrad_bound_check: K must be > 0");
    SubgradBoundReport rep;
    std::vector<double> zs;
    zs.reserve(n_samples + 16);
    for (std::size_t i = 0; i < n_samples; ++i) zs.push_back(rng.normal(0.0, 3.0));
    for (int e = 1; e <= 8; ++e) {  // kink neighborhood
        zs.push_back(std::pow(10.0, -e));
        zs.push_back(-std::pow(10.0, -e));
    }
    zs.push_back(0.0);
    const double slack = 1e-12;
    for (double z : zs) {
        const double g = std::abs(clarke_subgrad(a, z));
        ++rep.points_checked;
        if (g > K * (1.0 + slack)) rep.subgrad_violations.push_back({z, z, g});
    }
    for (std::size_t i = 0; i + 1 < zs.size(); i += 2) {
        const double z1 = zs[i], z2 = zs[i + 1];
        if (z1 == z2) continue;
        ++rep.pairs_checked;
        const double lhs = std::abs(activation_eval(a, z1) - activation_eval(a, z2));
        const double rhs = K * std::abs(z1 - z2);
        if (lhs > rhs * (1.0 + slack) + slack) rep.lipschitz_violations.push_back({z1, z2, lhs / std::abs(z1 - z2)});
    }
    rep.passed = rep.subgrad_violations.empty() && rep.lipschitz_violations.empty();
    return rep;
}

}  // namespace quasar
