#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>

namespace quasar {

/// Constants a loss sequence is certified with. rho is always required;
/// the remaining entries are present only when the certificate provides them.
///
/// grad_bound_M follows the proof of the sqrt(T) regret bound, where it
/// bounds the squared gradient norm; in the Lipschitz-style strong-quasar
/// bound it bounds the gradient norm itself.
struct QuasarConstants {
    double rho = 1.0;
    std::optional<double> mu;
    std::optional<double> gamma_ws;
    std::optional<double> smooth_L;
    std::optional<double> lip_K;
    std::optional<double> grad_bound_M;
    std::optional<double> eig_lambda;
    std::optional<double> input_bound_c;
};

namespace detail {

inline void require_rho(const QuasarConstants& k) {
    if (!(k.rho > 0.0) || k.rho > 1.0) {
        throw std::invalid_argument("QuasarConstants: rho must lie in (0,1], got " + std::to_string(k.rho));
    }
}

inline double require_value(const std::optional<double>& v, const char* name) {
    if (!v.has_value()) throw std::invalid_argument(std::string("QuasarConstants: missing ") + name);
    if (!(*v > 0.0)) {
        throw std::invalid_argument(std::string("QuasarConstants: ") + name + " must be > 0, got " +
                                    std::to_string(*v));
    }
    return *v;
}

}  // namespace detail

/// Evaluated regret bound with its term-by-term decomposition.
/// bound_total is always the sum of the present terms.
struct BoundReport {
    double bound_total = 0.0;
    double term_init = 0.0;
    double term_path = 0.0;
    double term_noise = 0.0;
    std::optional<double> term_sqrtT;
    std::map<std::string, double> inputs_echo;
};

/// Largest admissible constant step size for the linear-contraction regime:
/// min(2*rho/Gamma, (2*Gamma + rho^2*mu - sqrt(4*Gamma*rho^2*mu + rho^4*mu^2)) / (Gamma*rho*mu)).
inline double step_size_max_strong(const QuasarConstants& k) {
    detail::require_rho(k);
    const double rho = k.rho;
    const double mu = detail::require_value(k.mu, "mu");
    const double gamma = detail::require_value(k.gamma_ws, "gamma_ws");
    const double b1 = 2.0 * rho / gamma;
    const double r2m = rho * rho * mu;
    // rationalized 2*Gamma + rho^2*mu - sqrt(4*Gamma*rho^2*mu + rho^4*mu^2),
    // which cancels catastrophically when rho^2*mu << Gamma
    const double root = std::sqrt(4.0 * gamma * r2m + r2m * r2m);
    const double b2 = 4.0 * gamma * gamma / ((2.0 * gamma + r2m + root) * gamma * rho * mu);
    return std::min(b1, b2);
}

/// Simpler sufficient step-size rule; always within the step_size_max_strong
/// range for the same constants.
inline double step_size_sufficient(const QuasarConstants& k) {
    detail::require_rho(k);
    const double rho = k.rho;
    const double mu = detail::require_value(k.mu, "mu");
    const double gamma = detail::require_value(k.gamma_ws, "gamma_ws");
    const double b1 = 2.0 * rho / gamma;
    const double b2 = 2.0 * gamma / ((gamma + mu + std::sqrt(gamma * mu)) * rho * mu);
    return std::min(b1, b2);
}

/// Sufficient step size rho/(2L) for L-smooth losses; valid only for rho < 1/2.
inline double step_size_sufficient_smooth(const QuasarConstants& k) {
    detail::require_rho(k);
    if (!(k.rho < 0.5)) {
        throw std::invalid_argument("step_size_sufficient_smooth: requires rho < 1/2, got " +
                                    std::to_string(k.rho));
    }
    const double L = detail::require_value(k.smooth_L, "smooth_L");
    return k.rho / (2.0 * L);
}

/// Per-step contraction factor of squared distance to optimum under gradient
/// descent: gamma = 1 - alpha*rho*mu - (2*alpha*rho - alpha^2*Gamma)*rho^2*mu^2 / (4*Gamma).
/// Guaranteed in (0,1) for alpha inside the step_size_max_strong range.
inline double gamma_contraction(double alpha, const QuasarConstants& k) {
    const double max_alpha = step_size_max_strong(k);
    if (!(alpha > 0.0) || !(alpha < max_alpha)) {
        throw std::range_error("gamma_contraction: alpha " + std::to_string(alpha) +
                               " outside admissible range (0, " + std::to_string(max_alpha) +
                               ") = (0, step_size_max_strong)");
    }
    const double rho = k.rho;
    const double mu = *k.mu;
    const double gamma = *k.gamma_ws;
    const double r2m2 = rho * rho * mu * mu;
    return 1.0 - alpha * rho * mu - (2.0 * alpha * rho - alpha * alpha * gamma) * r2m2 / (4.0 * gamma);
}

/// Regret bound for weakly smooth quasar-convex losses with constant step
/// size alpha < 2*rho/Gamma.
inline BoundReport bound_quasar_weak_smooth(double alpha, const QuasarConstants& k, double init_dist_sq,
                                            double R, double path_var_VT, double cum_noise_var) {
    detail::require_rho(k);
    const double rho = k.rho;
    const double gamma = detail::require_value(k.gamma_ws, "gamma_ws");
    if (!(alpha > 0.0) || !(alpha < 2.0 * rho / gamma)) {
        throw std::range_error("bound_quasar_weak_smooth: alpha " + std::to_string(alpha) +
                               " outside (0, 2*rho/Gamma) = (0, " + std::to_string(2.0 * rho / gamma) + ")");
    }
    const double denom = 2.0 * alpha * rho - alpha * alpha * gamma;
    BoundReport r;
    r.term_init = init_dist_sq / denom;
    r.term_path = 3.0 * R * path_var_VT / denom;
    r.term_noise = alpha * cum_noise_var / (2.0 * rho - alpha * gamma);
    r.bound_total = r.term_init + r.term_path + r.term_noise;
    r.inputs_echo = {{"alpha", alpha},       {"rho", rho},
                     {"gamma_ws", gamma},    {"init_dist_sq", init_dist_sq},
                     {"R", R},               {"path_var_VT", path_var_VT},
                     {"cum_noise_var", cum_noise_var}};
    return r;
}

/// Regret bound for quasar-convex losses with bounded gradients and step size
/// alpha = c/sqrt(T). grad_bound_M bounds the squared gradient norm here.
inline BoundReport bound_quasar_bounded_grad(double c_scalar, std::size_t T, const QuasarConstants& k,
                                             double init_dist_sq, double R, double path_var_VT,
                                             double cum_noise_var) {
    detail::require_rho(k);
    const double rho = k.rho;
    const double M = detail::require_value(k.grad_bound_M, "grad_bound_M");
    if (!(c_scalar > 0.0)) throw std::invalid_argument("bound_quasar_bounded_grad: c_scalar must be > 0");
    if (T < 1) throw std::invalid_argument("bound_quasar_bounded_grad: T must be >= 1");
    const double sqrtT = std::sqrt(static_cast<double>(T));
    const double alpha = c_scalar / sqrtT;
    BoundReport r;
    r.term_sqrtT = (init_dist_sq / (2.0 * c_scalar * rho) + c_scalar * M / (2.0 * rho)) * sqrtT;
    r.term_path = 3.0 * R / (2.0 * rho * c_scalar) * sqrtT * path_var_VT;
    r.term_noise = alpha / (2.0 * rho) * cum_noise_var;
    r.term_init = 0.0;  // folded into term_sqrtT
    r.bound_total = *r.term_sqrtT + r.term_path + r.term_noise;
    r.inputs_echo = {{"c_scalar", c_scalar},
                     {"T", static_cast<double>(T)},
                     {"rho", rho},
                     {"grad_bound_M", M},
                     {"alpha", alpha},
                     {"init_dist_sq", init_dist_sq},
                     {"R", R},
                     {"path_var_VT", path_var_VT},
                     {"cum_noise_var", cum_noise_var}};
    return r;
}

/// Regret-minimizing scalar for the alpha = c/sqrt(T) rule given prior
/// knowledge of the path variation: c = sqrt((R^2 + 3*R*VT_prior) / M).
inline double optimal_c_scalar(double R, double VT_prior, double M) {
    if (!(R > 0.0)) throw std::invalid_argument("optimal_c_scalar: R must be > 0");
    if (!(VT_prior >= 0.0)) throw std::invalid_argument("optimal_c_scalar: VT_prior must be >= 0");
    if (!(M > 0.0)) throw std::invalid_argument("optimal_c_scalar: M must be > 0");
    return std::sqrt((R * R + 3.0 * R * VT_prior) / M);
}

/// Regret bound for strongly quasar-convex Lipschitz losses. The noise term
/// uses the alpha*M*sum(delta) form; the statement-level alpha*sum(delta)
/// variant is echoed alongside for comparison.
inline BoundReport bound_strong_quasar(double alpha, const QuasarConstants& k, double init_dist,
                                       double path_var_VT, double cum_noise) {
    const double M = detail::require_value(k.grad_bound_M, "grad_bound_M");
    const double gamma = gamma_contraction(alpha, k);  // validates alpha range and (rho, mu, Gamma)
    BoundReport r;
    r.term_init = M * init_dist / (1.0 - gamma);
    r.term_path = gamma * M * path_var_VT / (1.0 - gamma);
    r.term_noise = alpha * M * cum_noise;
    r.bound_total = r.term_init + r.term_path + r.term_noise;
    r.inputs_echo = {{"alpha", alpha},
                     {"rho", k.rho},
                     {"mu", *k.mu},
                     {"gamma_ws", *k.gamma_ws},
                     {"grad_bound_M", M},
                     {"gamma_contraction", gamma},
                     {"init_dist", init_dist},
                     {"path_var_VT", path_var_VT},
                     {"cum_noise", cum_noise},
                     {"term_noise_lipschitz_scaled", alpha * M * cum_noise},
                     {"term_noise_unscaled", alpha * cum_noise}};
    return r;
}

/// Smallest true-parameter norm under which single-ReLU basin persistence is
/// certified at failure probability tau, given gradient-error level delta_t.
inline double relu_min_norm(const QuasarConstants& k, double delta_t, double tau) {
    detail::require_rho(k);
    const double c = detail::require_value(k.input_bound_c, "input_bound_c");
    if (c < 0.5) {
        throw std::invalid_argument("relu_min_norm: requires input_bound_c >= 1/2, got " + std::to_string(c));
    }
    if (!(tau > 0.0) || !(tau < 1.0)) throw std::invalid_argument("relu_min_norm: tau must lie in (0,1)");
    if (!(delta_t >= 0.0)) throw std::invalid_argument("relu_min_norm: delta_t must be >= 0");
    const double rho = k.rho;
    // rationalized -8c + sqrt(64c^2 + 2*rho^2*c); the direct form cancels badly for small rho
    const double inner = 2.0 * rho * rho * c / (8.0 * c + std::sqrt(64.0 * c * c + 2.0 * rho * rho * c));
    return 2.0 * rho * delta_t / (std::sqrt(tau) * inner);
}

/// Largest certified per-step drift of the true parameter for single-ReLU
/// basin persistence: alpha*rho*||wstar||/32.
inline double relu_max_drift(double alpha, const QuasarConstants& k, double wstar_norm) {
    detail::require_rho(k);
    if (!(alpha > 0.0)) throw std::invalid_argument("relu_max_drift: alpha must be > 0");
    if (!(wstar_norm >= 0.0)) throw std::invalid_argument("relu_max_drift: wstar_norm must be >= 0");
    return alpha * k.rho * wstar_norm / 32.0;
}

}  // namespace quasar
