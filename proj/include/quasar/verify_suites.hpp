#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "quasar/experiment.hpp"
#include "quasar/verify.hpp"

namespace quasar {

/// Exact quadratic oracle (L/2)*||w - wstar||^2 with the given certificate.
inline OracleFn quadratic_oracle(Vector wstar, double L, QuasarConstants k) {
    OracleFn fn;
    Vector ws = std::move(wstar);
    fn.value = [ws, L](const Vector& w) { return 0.5 * L * squared_norm(sub(w, ws)); };
    fn.gradient = [ws, L](const Vector& w) { return scaled(sub(w, ws), L); };
    fn.minimizer = ws;
    fn.constants = std::move(k);
    return fn;
}

/// Exact oracle sqrt(||w - wstar||): quasar-convex with rho = 1/2 exactly,
/// so checking rho = 1 must fail at every point away from the minimizer.
inline OracleFn sqrt_distance_oracle(Vector wstar) {
    OracleFn fn;
    Vector ws = std::move(wstar);
    fn.value = [ws](const Vector& w) { return std::sqrt(norm(sub(w, ws))); };
    fn.gradient = [ws](const Vector& w) {
        const Vector d = sub(w, ws);
        const double dist = norm(d);
        if (dist == 0.0) return Vector(w.size(), 0.0);
        return scaled(d, 0.5 / (dist * std::sqrt(dist)));
    };
    fn.minimizer = ws;
    fn.constants = QuasarConstants{0.5, {}, {}, {}, {}, {}, {}, {}};
    return fn;
}

/// A ReLU problem whose drift, true-parameter norm, and step size satisfy the
/// basin-persistence certificate: the input-norm bound is measured over the
/// exact batch streams the study will draw, the parameter norm is scaled
/// above the certified minimum for a capped gradient-error level, and the
/// drift stays inside the certified per-step budget.
struct ReluBasinStudy {
    GlmProblem problem;
    QuasarConstants constants;
    double alpha = 0.0;
    double delta_cap = 0.0;
};

inline ReluBasinStudy build_relu_basin_study(std::size_t n, std::size_t T, std::size_t m, double noise_std,
                                             std::uint64_t seed, std::size_t trials) {
    if (!(noise_std > 0.0)) throw std::invalid_argument("build_relu_basin_study: noise_std must be > 0");
    SeededRng dir_rng(mix_seed(seed, 7));
    Vector dir = gaussian_vector(dir_rng, n);
    dir = scaled(dir, 1.0 / norm(dir));

    // The inputs drawn by the persistence check do not depend on the
    // parameter scale, so the norm bound can be measured on a unit-scale
    // replay of the same streams.
    GlmProblem probe{Activation::relu(), n, std::vector<Vector>(T, dir), m, noise_std};
    double c_emp = 0.0;
    for (std::size_t trial = 0; trial < trials; ++trial) {
        const std::uint64_t trial_seed = mix_seed(seed, 1000 + trial);
        for (std::size_t t = 0; t < T; ++t) {
            SeededRng batch_rng(mix_seed(trial_seed, 1 + t));
            const SampleBatch b = sample_batch(probe, t, batch_rng, true);
            for (const Vector& x : b.inputs) c_emp = std::max(c_emp, squared_norm(x));
        }
    }

    const DistributionInfo dist = DistributionInfo::standard_gaussian(c_emp);
    QuasarConstants k = derive_constants(probe, dist, ReluBasinHint{});
    const double alpha = k.rho / (2.0 * c_emp);

    // Cap on the measured gradient-error level: the noise-only standard error
    // is noise_std*sqrt(n/2)/sqrt(m); a factor of four absorbs the residual
    // part of trajectories started near the optimum and sampling fluctuation.
    const double delta_noise = noise_std * std::sqrt(static_cast<double>(n) / 2.0) /
                               std::sqrt(static_cast<double>(m));
    const double delta_cap = 4.0 * delta_noise;
    const double scale = 1.5 * relu_min_norm(k, delta_cap, 0.01);

    std::vector<Vector> params;
    params.reserve(T);
    params.push_back(scaled(dir, scale));
    SeededRng drift_rng(mix_seed(seed, 8));
    const double drift0 = relu_max_drift(alpha, k, scale) /
                          (12.0 * std::sqrt(static_cast<double>(n)));
    for (std::size_t t = 1; t < T; ++t) {
        const double coef = drift0 / std::sqrt(static_cast<double>(t));
        params.push_back(add_scaled(params.back(), coef, gaussian_vector(drift_rng, n)));
    }
    for (std::size_t t = 0; t + 1 < T; ++t) {
        const double drift = distance(params[t], params[t + 1]);
        if (drift > relu_max_drift(alpha, k, norm(params[t]))) {
            throw std::runtime_error("build_relu_basin_study: drift draw exceeded the certified budget");
        }
    }

    ReluBasinStudy study;
    study.problem = GlmProblem{Activation::relu(), n, std::move(params), m, noise_std};
    study.constants = derive_constants(study.problem, dist, ReluBasinHint{});
    study.alpha = alpha;
    study.delta_cap = delta_cap;
    return study;
}

/// One verification suite entry: a report plus whether it is a negative
/// control (expected to fail).
struct VerifyEntry {
    std::string suite;
    bool expected_fail = false;
    CheckReport report;
};

struct VerifyOutcome {
    std::vector<VerifyEntry> entries;

    bool all_ok() const {
        for (const VerifyEntry& e : entries) {
            if (!e.report.applicable) continue;
            if (e.expected_fail ? e.report.passed : !e.report.passed) return false;
        }
        return true;
    }
};

inline const std::vector<std::string>& verify_suite_names() {
    static const std::vector<std::string> names = {
        "fd_gradient",        "subgrad_bound",       "quasar",
        "strong_quasar",      "weak_smoothness",     "error_bound_qg",
        "offline_contraction", "relu_basin",
        "quasar_negative_control",       "strong_quasar_negative_control",
        "weak_smoothness_negative_control", "error_bound_qg_negative_control"};
    return names;
}

namespace detail {

// Scales shared by all verification suites. Inflation/deflation factors of
// the negative controls are sized to violate well past the 3-standard-error
// Monte Carlo tolerance.
inline constexpr std::size_t kVerifyPool = 20000;
inline constexpr std::size_t kVerifyPoints = 1000;
inline constexpr std::size_t kFdPoints = 100;
inline constexpr double kMuInflation = 1e5;
inline constexpr double kGammaDeflation = 1e-3;

struct VerifySetup {
    GlmMcOracle mc;
    OracleFn oracle;
    QuasarConstants constants;
    double quasar_rho = 0.0;  // plain-quasar certificate (strong one is halved)
    SamplingSpec points;

    VerifySetup(const ExperimentConfig& cfg, std::uint64_t seed)
        : mc(make_mc(cfg, seed)), oracle(), constants(), points() {
        GlmProblem tiny{cfg.make_activation(), cfg.n, {mc.wstar()}, 2, 0.0};
        const DistributionInfo dist = DistributionInfo::standard_gaussian(mc.max_input_sq());
        if (cfg.activation == "leaky_relu") {
            constants = derive_constants(tiny, dist, BallRegion(Vector(cfg.n, 0.0), 3.0));
            quasar_rho = std::min(1.0, 2.0 * constants.rho);
            points = SamplingSpec::in_ball(BallRegion(mc.wstar(), 3.0), kVerifyPoints, mix_seed(seed, 21));
        } else if (cfg.activation == "logistic") {
            // region of diameter 2 around a norm-1 optimum; inputs were
            // rescaled to the unit ball so the certificate hypotheses hold
            constants = derive_constants(tiny, dist, BallRegion(Vector(cfg.n, 0.0), 1.0));
            quasar_rho = constants.rho;
            points = SamplingSpec::in_ball(BallRegion(mc.wstar(), 1.0), kVerifyPoints, mix_seed(seed, 21));
        } else {
            constants = derive_constants(tiny, dist, ReluBasinHint{});
            quasar_rho = std::min(1.0, 2.0 * constants.rho);
            points = SamplingSpec::in_relu_basin(mc.wstar(), kVerifyPoints, mix_seed(seed, 21));
        }
        oracle = mc.to_oracle(constants);
    }

private:
    static GlmMcOracle make_mc(const ExperimentConfig& cfg, std::uint64_t seed) {
        SeededRng ws_rng(mix_seed(seed, 20));
        Vector wstar = gaussian_vector(ws_rng, cfg.n);
        if (cfg.activation == "logistic") wstar = scaled(wstar, 1.0 / norm(wstar));
        SeededRng pool_rng(mix_seed(seed, 22));
        return GlmMcOracle(cfg.make_activation(), std::move(wstar), kVerifyPool, pool_rng,
                           cfg.activation == "logistic");
    }
};

inline CheckReport not_applicable(std::string name, std::string why) {
    CheckReport rep;
    rep.check_name = std::move(name);
    rep.applicable = false;
    rep.passed = true;
    rep.note = std::move(why);
    return rep;
}

inline OracleFn empirical_loss_oracle(const Activation& act, SampleBatch batch) {
    auto shared = std::make_shared<SampleBatch>(std::move(batch));
    OracleFn fn;
    fn.value = [act, shared](const Vector& w) { return empirical_loss(act, w, *shared); };
    fn.gradient = [act, shared](const Vector& w) { return empirical_gradient(act, w, *shared); };
    return fn;
}

}  // namespace detail

/// verify subcommand backend: runs the selected suites (all when the list is
/// empty) for the configured activation. Negative controls are marked
/// expected_fail; suites whose certificate does not exist for the activation
/// come back not applicable.
inline VerifyOutcome cmd_verify(const ExperimentConfig& cfg, std::vector<std::string> suites) {
    cfg.validate();
    if (suites.empty()) suites = verify_suite_names();
    for (const std::string& s : suites) {
        const auto& names = verify_suite_names();
        if (std::find(names.begin(), names.end(), s) == names.end()) {
            throw std::invalid_argument("verify: unknown suite '" + s + "'");
        }
    }

    const std::uint64_t seed = cfg.seed;
    detail::VerifySetup setup(cfg, seed);
    const QuasarConstants& k = setup.constants;
    const bool has_mu = k.mu.has_value();

    VerifyOutcome out;
    auto add = [&out](const std::string& suite, bool expected_fail, CheckReport rep) {
        out.entries.push_back({suite, expected_fail, std::move(rep)});
    };

    for (const std::string& s : suites) {
        if (s == "quasar") {
            add(s, false, check_quasar(setup.oracle, setup.quasar_rho, setup.points, 0.0));
        } else if (s == "strong_quasar") {
            if (!has_mu) {
                add(s, false, detail::not_applicable("strong_quasar",
                                                     "no strong-quasar certificate for " + cfg.activation));
                continue;
            }
            add(s, false, check_strong_quasar(setup.oracle, k.rho, *k.mu, setup.points, 0.0));
        } else if (s == "weak_smoothness") {
            add(s, false, check_weak_smoothness(setup.oracle, *k.gamma_ws, setup.points, 0.0));
        } else if (s == "error_bound_qg") {
            if (!has_mu) {
                add(s, false, detail::not_applicable("error_bound_and_qg",
                                                     "no strong-quasar certificate for " + cfg.activation));
                continue;
            }
            add(s, false, check_error_bound_and_qg(setup.oracle, k.rho, *k.mu, *k.gamma_ws, setup.points, 0.0));
        } else if (s == "offline_contraction") {
            if (!has_mu) {
                add(s, false, detail::not_applicable("offline_contraction",
                                                     "no strong-quasar certificate for " + cfg.activation));
                continue;
            }
            const double alpha = 0.5 * step_size_max_strong(k);
            SamplingSpec starts = setup.points;
            starts.count = 5;
            starts.seed = mix_seed(seed, 23);
            add(s, false, check_offline_contraction(setup.oracle, alpha, starts, 10, 0.0));
        } else if (s == "fd_gradient") {
            GlmProblem p{cfg.make_activation(), cfg.n, {setup.mc.wstar()}, 50, 0.0};
            SeededRng batch_rng(mix_seed(seed, 24));
            const SampleBatch batch = sample_batch(p, 0, batch_rng, false);
            OracleFn fn = detail::empirical_loss_oracle(p.activation, batch);
            SamplingSpec pts = SamplingSpec::in_ball(BallRegion(setup.mc.wstar(), 2.0), detail::kFdPoints,
                                                     mix_seed(seed, 25));
            if (cfg.activation != "logistic") {
                pts.filter = [&batch](const Vector& w) {
                    for (const Vector& x : batch.inputs) {
                        if (std::abs(dot(w, x)) <= 1e-3) return false;
                    }
                    return true;
                };
            }
            add(s, false, fd_gradient_check(fn, pts, 1e-5, 1e-5));
        } else if (s == "subgrad_bound") {
            const double K = cfg.activation == "logistic" ? 0.25 : 1.0;
            SeededRng rng(mix_seed(seed, 26));
            const SubgradBoundReport r = subgrad_bound_check(cfg.make_activation(), K, 10000, rng);
            CheckReport rep;
            rep.check_name = "subgrad_bound";
            rep.points_tested = r.points_checked + r.pairs_checked;
            rep.tolerance_used = K;
            for (const auto& v : r.subgrad_violations) rep.violations.push_back({0, v.observed, K, v.observed - K});
            for (const auto& v : r.lipschitz_violations) rep.violations.push_back({1, v.observed, K, v.observed - K});
            rep.passed = r.passed;
            add(s, false, std::move(rep));
        } else if (s == "relu_basin") {
            if (cfg.activation != "relu") {
                add(s, false, detail::not_applicable("relu_basin_persistence",
                                                     "basin study applies to the ReLU activation only"));
                continue;
            }
            const std::size_t trials = std::max<std::size_t>(cfg.trials, 20);
            ReluBasinStudy study = build_relu_basin_study(cfg.n, std::min<std::size_t>(cfg.T, 200),
                                                          std::min<std::size_t>(cfg.m, 1000),
                                                          cfg.noise_std > 0.0 ? cfg.noise_std : 0.1,
                                                          mix_seed(seed, 27), trials);
            BasinPersistenceOptions opts;
            opts.trials = trials;
            opts.tau = 0.01;
            opts.init_radius_frac = 1e-9;
            SeededRng rng(mix_seed(seed, 28));
            add(s, false, check_relu_basin_persistence(study.problem, study.alpha, study.constants, rng, opts));
        } else if (s == "quasar_negative_control") {
            SeededRng ws_rng(mix_seed(seed, 29));
            const Vector ws = gaussian_vector(ws_rng, cfg.n);
            OracleFn fn = sqrt_distance_oracle(ws);
            SamplingSpec pts = SamplingSpec::in_ball(BallRegion(ws, 2.0), 200, mix_seed(seed, 30));
            add(s, true, check_quasar(fn, 1.0, pts, 1e-9));
        } else if (s == "strong_quasar_negative_control") {
            SeededRng ws_rng(mix_seed(seed, 31));
            const Vector ws = gaussian_vector(ws_rng, cfg.n);
            OracleFn quad = quadratic_oracle(ws, 1.0, QuasarConstants{1.0, 1.0, 2.0, {}, {}, {}, {}, {}});
            SamplingSpec pts = SamplingSpec::in_ball(BallRegion(ws, 2.0), 200, mix_seed(seed, 32));
            add(s, true, check_strong_quasar(quad, 1.0, 3.0, pts, 1e-9));
            if (has_mu) {
                add(s, true, check_strong_quasar(setup.oracle, k.rho, *k.mu * detail::kMuInflation,
                                                 setup.points, 0.0));
            }
        } else if (s == "weak_smoothness_negative_control") {
            SeededRng ws_rng(mix_seed(seed, 33));
            const Vector ws = gaussian_vector(ws_rng, cfg.n);
            OracleFn quad = quadratic_oracle(ws, 1.0, QuasarConstants{1.0, 1.0, 2.0, {}, {}, {}, {}, {}});
            SamplingSpec pts = SamplingSpec::in_ball(BallRegion(ws, 2.0), 200, mix_seed(seed, 34));
            add(s, true, check_weak_smoothness(quad, 1.0, pts, 1e-9));
            add(s, true, check_weak_smoothness(setup.oracle, *k.gamma_ws * detail::kGammaDeflation,
                                               setup.points, 0.0));
        } else if (s == "error_bound_qg_negative_control") {
            SeededRng ws_rng(mix_seed(seed, 35));
            const Vector ws = gaussian_vector(ws_rng, cfg.n);
            OracleFn quad = quadratic_oracle(ws, 1.0, QuasarConstants{1.0, 1.0, 2.0, {}, {}, {}, {}, {}});
            SamplingSpec pts = SamplingSpec::in_ball(BallRegion(ws, 2.0), 200, mix_seed(seed, 36));
            add(s, true, check_error_bound_and_qg(quad, 1.0, 10.0, 2.0, pts, 1e-9));
            if (has_mu) {
                add(s, true, check_error_bound_and_qg(setup.oracle, k.rho, *k.mu * detail::kMuInflation,
                                                      *k.gamma_ws, setup.points, 0.0));
            }
        }
    }
    return out;
}

/// Text form of a whole verification outcome: the per-check TSV blocks plus
/// one trailing status line per suite entry.
inline std::string to_text(const VerifyOutcome& out) {
    std::string text;
    for (const VerifyEntry& e : out.entries) {
        text += to_tsv(e.report);
        std::string status;
        if (!e.report.applicable) {
            status = "not_applicable";
        } else if (e.expected_fail) {
            status = e.report.passed ? "UNEXPECTED_PASS" : "expected_fail";
        } else {
            status = e.report.passed ? "pass" : "FAIL";
        }
        text += e.suite + "\tstatus\t" + status + "\n";
    }
    return text;
}

}  // namespace quasar
