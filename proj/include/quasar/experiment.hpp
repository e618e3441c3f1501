#pragma once

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "quasar/core.hpp"
#include "quasar/env.hpp"
#include "quasar/format.hpp"
#include "quasar/glm.hpp"
#include "quasar/runner.hpp"
#include "quasar/theory.hpp"

namespace quasar {

/// One experiment: activation, problem sizes, step-size rule, drift schedule,
/// noise level, seed. Config files are flat JSON with exactly these keys;
/// unknown keys are rejected.
struct ExperimentConfig {
    std::string activation = "leaky_relu";
    double kappa = 0.1;
    std::size_t T = 1000;
    std::size_t n = 50;
    std::size_t m = 1000;
    std::size_t eval_m = 1000;
    std::optional<double> alpha;     // exactly one of alpha / c_scalar; defaults to alpha = 0.1
    std::optional<double> c_scalar;
    double drift_scale = 0.01;
    double drift_exponent = 0.5;
    double noise_std = 0.0;
    std::uint64_t seed = 1;
    std::optional<double> projection_radius;
    std::size_t trials = 1;

    bool noisy() const { return noise_std > 0.0; }

    void validate() const {
        if (activation != "leaky_relu" && activation != "logistic" && activation != "relu") {
            throw std::invalid_argument("config: activation must be leaky_relu|logistic|relu, got '" +
                                        activation + "'");
        }
        if (activation == "leaky_relu" && (!(kappa > 0.0) || kappa > 1.0)) {
            throw std::invalid_argument("config: kappa must lie in (0,1]");
        }
        if (T < 1 || n < 1 || m < 1 || eval_m < 1 || trials < 1) {
            throw std::invalid_argument("config: T, n, m, eval_m, trials must all be >= 1");
        }
        if (alpha && c_scalar) throw std::invalid_argument("config: set only one of alpha / c_scalar");
        if (alpha && !(*alpha > 0.0)) throw std::invalid_argument("config: alpha must be > 0");
        if (c_scalar && !(*c_scalar > 0.0)) throw std::invalid_argument("config: c_scalar must be > 0");
        if (!(drift_scale >= 0.0)) throw std::invalid_argument("config: drift_scale must be >= 0");
        if (!(noise_std >= 0.0)) throw std::invalid_argument("config: noise_std must be >= 0");
        if (projection_radius && !(*projection_radius > 0.0)) {
            throw std::invalid_argument("config: projection_radius must be > 0");
        }
    }

    Activation make_activation() const {
        if (activation == "leaky_relu") return Activation::leaky(kappa);
        if (activation == "logistic") return Activation::logistic();
        return Activation::relu();
    }

    StepSizePolicy make_policy() const {
        if (c_scalar) return StepSizePolicy::inverse_sqrt(*c_scalar);
        return StepSizePolicy::constant(alpha.value_or(0.1));
    }

    static ExperimentConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;

    /// The three reference experiments; noisy toggles 0.01-variance label noise.
    static ExperimentConfig preset(const std::string& name, bool noisy);
};

inline ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
    static const char* known[] = {"activation", "kappa",  "T",         "n",
                                  "m",          "eval_m", "alpha",     "c_scalar",
                                  "drift_scale", "drift_exponent",     "noise_std", "seed",
                                  "projection_radius",    "trials"};
    for (const auto& item : j.items()) {
        bool ok = false;
        for (const char* k : known) {
            if (item.key() == k) {
                ok = true;
                break;
            }
        }
        if (!ok) throw std::invalid_argument("config: unknown key '" + item.key() + "'");
    }
    ExperimentConfig c;
    if (j.contains("activation")) c.activation = j.at("activation").get<std::string>();
    if (j.contains("kappa")) c.kappa = j.at("kappa").get<double>();
    if (j.contains("T")) c.T = j.at("T").get<std::size_t>();
    if (j.contains("n")) c.n = j.at("n").get<std::size_t>();
    if (j.contains("m")) c.m = j.at("m").get<std::size_t>();
    if (j.contains("eval_m")) c.eval_m = j.at("eval_m").get<std::size_t>();
    if (j.contains("alpha")) c.alpha = j.at("alpha").get<double>();
    if (j.contains("c_scalar")) c.c_scalar = j.at("c_scalar").get<double>();
    if (j.contains("drift_scale")) c.drift_scale = j.at("drift_scale").get<double>();
    if (j.contains("drift_exponent")) c.drift_exponent = j.at("drift_exponent").get<double>();
    if (j.contains("noise_std")) c.noise_std = j.at("noise_std").get<double>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("projection_radius")) c.projection_radius = j.at("projection_radius").get<double>();
    if (j.contains("trials")) c.trials = j.at("trials").get<std::size_t>();
    c.validate();
    return c;
}

inline nlohmann::json ExperimentConfig::to_json() const {
    nlohmann::json j;
    j["activation"] = activation;
    if (activation == "leaky_relu") j["kappa"] = kappa;
    j["T"] = T;
    j["n"] = n;
    j["m"] = m;
    j["eval_m"] = eval_m;
    if (c_scalar) {
        j["c_scalar"] = *c_scalar;
    } else {
        j["alpha"] = alpha.value_or(0.1);
    }
    j["drift_scale"] = drift_scale;
    j["drift_exponent"] = drift_exponent;
    j["noise_std"] = noise_std;
    j["seed"] = seed;
    if (projection_radius) j["projection_radius"] = *projection_radius;
    j["trials"] = trials;
    return j;
}

inline ExperimentConfig ExperimentConfig::preset(const std::string& name, bool noisy) {
    ExperimentConfig c;
    c.noise_std = noisy ? 0.1 : 0.0;  // 0.01 label-noise variance in the noisy setting
    if (name == "leaky_relu_default") {
        c.activation = "leaky_relu";
        c.kappa = 0.1;
    } else if (name == "logistic_default") {
        c.activation = "logistic";
        c.projection_radius = 10.0;
    } else if (name == "relu_default") {
        c.activation = "relu";
    } else {
        throw std::invalid_argument("unknown preset '" + name +
                                    "' (expected leaky_relu_default|logistic_default|relu_default)");
    }
    return c;
}

/// Overrides the config seed from QUASAR_SEED when the variable is set.
inline void apply_env_seed_override(ExperimentConfig& cfg) {
    if (const char* s = std::getenv("QUASAR_SEED")) {
        cfg.seed = static_cast<std::uint64_t>(std::stoull(s));
    }
}

namespace detail {

// Substream ids under the config seed: one per trial, plus the environment.
inline constexpr std::uint64_t kEnvStream = ~0ULL;

}  // namespace detail

struct ExperimentResult {
    ExperimentConfig cfg;
    EnvTrace env;
    std::vector<RunRecord> records;  // one per trial
    nlohmann::json bounds;
    std::string csv;
};

/// The regret CSV schema: one row per step, means across trials when
/// trials > 1 (in_basin then holds the in-basin fraction).
inline std::string write_regret_csv(const std::vector<RunRecord>& records, const EnvTrace& env) {
    std::string out = "t,instant_regret,cum_regret,dist_to_opt,path_var_cum,delta_est,in_basin\n";
    if (records.empty()) return out;
    const std::size_t T = records[0].per_step_regret.size();
    const double inv = 1.0 / static_cast<double>(records.size());
    double path_cum = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
        double inst = 0.0, cum = 0.0, dist = 0.0, delta = 0.0, basin = 0.0;
        for (const RunRecord& r : records) {
            inst += r.per_step_regret[t];
            cum += r.cum_regret[t];
            dist += r.dist_to_opt[t];
            delta += r.delta_estimates[t];
            basin += r.in_basin[t] ? 1.0 : 0.0;
        }
        if (t > 0) path_cum += env.per_step_drift[t - 1];
        out += std::to_string(t + 1) + "," + format_double(inst * inv) + "," + format_double(cum * inv) + "," +
               format_double(dist * inv) + "," + format_double(path_cum) + "," + format_double(delta * inv) +
               "," + format_double(basin * inv) + "\n";
    }
    return out;
}

namespace detail {

inline nlohmann::json constants_json(const QuasarConstants& k) {
    nlohmann::json j;
    j["rho"] = k.rho;
    auto put = [&j](const char* name, const std::optional<double>& v) {
        if (v) j[name] = *v;
    };
    put("mu", k.mu);
    put("gamma_ws", k.gamma_ws);
    put("smooth_L", k.smooth_L);
    put("lip_K", k.lip_K);
    put("grad_bound_M", k.grad_bound_M);
    put("eig_lambda", k.eig_lambda);
    put("input_bound_c", k.input_bound_c);
    return j;
}

inline nlohmann::json bound_json(const BoundReport& b) {
    nlohmann::json j;
    j["bound_total"] = b.bound_total;
    j["term_init"] = b.term_init;
    j["term_path"] = b.term_path;
    j["term_noise"] = b.term_noise;
    if (b.term_sqrtT) j["term_sqrtT"] = *b.term_sqrtT;
    j["inputs_echo"] = b.inputs_echo;
    return j;
}

}  // namespace detail

/// Evaluates the theory bound that applies to the configured activation with
/// the measured path variation, gradient-error estimates, and the empirical
/// input-norm bound. When the configured step size is outside the admissible
/// range the report says so instead of producing a bound.
inline nlohmann::json make_bounds_json(const ExperimentConfig& cfg, const RunRecord& rec,
                                       const EnvTrace& env) {
    nlohmann::json out;
    const std::size_t T = cfg.T;
    const double c_emp = rec.max_input_sq;
    const double init_dist = rec.dist_to_opt.front();
    double sum_delta = 0.0, sum_delta_sq = 0.0;
    for (std::size_t t = 0; t + 1 < T; ++t) {
        sum_delta += rec.delta_estimates[t];
        sum_delta_sq += rec.delta_estimates[t] * rec.delta_estimates[t];
    }
    double emp_R = 0.0;
    for (double d : rec.dist_to_opt) emp_R = std::max(emp_R, d);

    out["V_T"] = env.path_variation_VT;
    out["sum_delta"] = sum_delta;
    out["sum_delta_sq"] = sum_delta_sq;
    out["init_dist"] = init_dist;
    out["final_cum_regret"] = rec.cum_regret.back();
    out["input_bound_c"] = c_emp;
    out["input_bound_c_source"] = "empirical max ||x||^2 over the run's samples (Gaussian inputs are unbounded)";
    out["max_dist_to_opt"] = emp_R;
    out["alpha"] = rec.alpha_used;

    GlmProblem p{cfg.make_activation(), cfg.n, env.true_params, cfg.m, cfg.noise_std};
    const DistributionInfo dist = DistributionInfo::standard_gaussian(c_emp);
    QuasarConstants k;
    std::string bound_name;
    double R_diam = 0.0;
    if (cfg.activation == "leaky_relu") {
        k = derive_constants(p, dist, BallRegion(Vector(cfg.n, 0.0), emp_R));
        bound_name = "strong_quasar";
    } else if (cfg.activation == "logistic") {
        double r = cfg.projection_radius.value_or(0.0);
        if (r == 0.0) {
            for (const Vector& w : rec.iterates) r = std::max(r, norm(w));
            for (const Vector& w : env.true_params) r = std::max(r, norm(w));
        }
        R_diam = 2.0 * r;
        k = derive_constants(p, dist, BallRegion(Vector(cfg.n, 0.0), r));
        bound_name = "quasar_weak_smooth";
    } else {
        k = derive_constants(p, dist, ReluBasinHint{});
        bound_name = "strong_quasar";
    }
    out["constants"] = detail::constants_json(k);
    out["bound_name"] = bound_name;

    try {
        if (bound_name == "strong_quasar") {
            out["admissible_alpha_max"] = step_size_max_strong(k);
            const BoundReport b = bound_strong_quasar(rec.alpha_used, k, init_dist, env.path_variation_VT,
                                                      sum_delta);
            out["bound"] = detail::bound_json(b);
            out["alpha_admissible"] = true;
            out["bound_dominates"] = b.bound_total >= rec.cum_regret.back();
        } else {
            out["admissible_alpha_max"] = 2.0 * k.rho / *k.gamma_ws;
            const BoundReport b = bound_quasar_weak_smooth(rec.alpha_used, k, init_dist * init_dist, R_diam,
                                                           env.path_variation_VT, sum_delta_sq);
            out["bound"] = detail::bound_json(b);
            out["alpha_admissible"] = true;
            out["bound_dominates"] = b.bound_total >= rec.cum_regret.back();
        }
    } catch (const std::range_error& e) {
        out["alpha_admissible"] = false;
        out["alpha_range_note"] = e.what();
    }
    return out;
}

/// Runs the configured experiment: generates the drifting environment, fans
/// independent trials out across workers, and assembles CSV plus bound report.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    ExperimentResult res;
    res.cfg = cfg;

    SeededRng env_rng(mix_seed(cfg.seed, detail::kEnvStream));
    res.env = generate_env(DriftConfig{cfg.T, cfg.n, cfg.drift_scale, cfg.drift_exponent, 0}, env_rng);

    GlmProblem p{cfg.make_activation(), cfg.n, res.env.true_params, cfg.m, cfg.noise_std};
    std::optional<BallRegion> region;
    if (cfg.projection_radius) region = BallRegion(Vector(cfg.n, 0.0), *cfg.projection_radius);
    const StepSizePolicy policy = cfg.make_policy();

    res.records.resize(cfg.trials);
    auto run_trial = [&](std::size_t i) {
        SeededRng rng(mix_seed(cfg.seed, i));
        res.records[i] = run_online(p, policy, region, rng, cfg.noisy(), cfg.eval_m);
    };
    if (cfg.trials == 1) {
        run_trial(0);
    } else {
        std::vector<std::future<void>> futs;
        futs.reserve(cfg.trials);
        for (std::size_t i = 0; i < cfg.trials; ++i) {
            futs.push_back(std::async(std::launch::async, run_trial, i));
        }
        for (auto& f : futs) f.get();
    }

    res.csv = write_regret_csv(res.records, res.env);
    res.bounds = make_bounds_json(cfg, res.records[0], res.env);
    res.bounds["trials"] = cfg.trials;
    return res;
}

/// run subcommand: executes the experiment and writes regret.csv,
/// bounds.json, and config.json under out_dir.
inline ExperimentResult cmd_run(const ExperimentConfig& cfg, const std::filesystem::path& out_dir) {
    ExperimentResult res = run_experiment(cfg);
    std::filesystem::create_directories(out_dir);
    {
        std::ofstream f(out_dir / "regret.csv", std::ios::binary);
        if (!f) throw std::runtime_error("cannot write " + (out_dir / "regret.csv").string());
        f << res.csv;
    }
    {
        std::ofstream f(out_dir / "bounds.json", std::ios::binary);
        f << res.bounds.dump(2) << "\n";
    }
    {
        std::ofstream f(out_dir / "config.json", std::ios::binary);
        f << res.cfg.to_json().dump(2) << "\n";
    }
    return res;
}

/// bounds subcommand: constants, admissible step sizes, contraction factor,
/// and the bound decomposition computed before any run. The input-norm bound
/// comes from a seeded 1e5-draw empirical max; gradient-error sums are not
/// available without a run and enter as zero.
inline nlohmann::json cmd_bounds(const ExperimentConfig& cfg) {
    cfg.validate();
    nlohmann::json out;

    SeededRng c_rng(mix_seed(cfg.seed, 0xC0FFEE));
    double c_emp = 0.0;
    for (std::size_t i = 0; i < 100000 / std::max<std::size_t>(cfg.n, 1) + 1; ++i) {
        c_emp = std::max(c_emp, squared_norm(gaussian_vector(c_rng, cfg.n)));
    }

    SeededRng env_rng(mix_seed(cfg.seed, detail::kEnvStream));
    const EnvTrace env = generate_env(DriftConfig{cfg.T, cfg.n, cfg.drift_scale, cfg.drift_exponent, 0}, env_rng);
    SeededRng init_rng(mix_seed(mix_seed(cfg.seed, 0), kInitStreamTag));
    const Vector w1 = scaled(gaussian_vector(init_rng, cfg.n), 0.01);
    const double init_dist = distance(w1, env.true_params[0]);

    GlmProblem p{cfg.make_activation(), cfg.n, env.true_params, cfg.m, cfg.noise_std};
    const DistributionInfo dist = DistributionInfo::standard_gaussian(c_emp);
    const double alpha = cfg.make_policy().alpha_for(cfg.T);

    out["alpha"] = alpha;
    out["V_T"] = env.path_variation_VT;
    out["init_dist"] = init_dist;
    out["input_bound_c"] = c_emp;
    out["input_bound_c_source"] = "empirical max ||x||^2 over 1e5 seeded draws";
    out["noise_sums_note"] = "sum_delta and sum_delta_sq are zero here; run the experiment for measured values";

    if (cfg.activation == "logistic") {
        const double r = cfg.projection_radius.value_or(std::max(norm(w1), norm(env.true_params[0])));
        const QuasarConstants k = derive_constants(p, dist, BallRegion(Vector(cfg.n, 0.0), r));
        out["constants"] = detail::constants_json(k);
        const double max_alpha = 2.0 * k.rho / *k.gamma_ws;
        out["admissible_alpha_max"] = max_alpha;
        if (!(alpha < max_alpha)) {
            throw std::range_error("bounds: alpha " + format_double(alpha) + " is not below 2*rho/Gamma = " +
                                   format_double(max_alpha));
        }
        out["bound"] = detail::bound_json(
            bound_quasar_weak_smooth(alpha, k, init_dist * init_dist, 2.0 * r, env.path_variation_VT, 0.0));
        return out;
    }

    QuasarConstants k;
    if (cfg.activation == "leaky_relu") {
        k = derive_constants(p, dist, BallRegion(Vector(cfg.n, 0.0), init_dist));
        out["region_radius_note"] = "R taken as the initial distance to the optimum";
    } else {
        k = derive_constants(p, dist, ReluBasinHint{});
    }
    out["constants"] = detail::constants_json(k);
    out["admissible_alpha_max"] = step_size_max_strong(k);
    out["sufficient_alpha"] = step_size_sufficient(k);
    out["gamma_contraction"] = gamma_contraction(alpha, k);  // range error names the bound if alpha too large
    out["bound"] = detail::bound_json(bound_strong_quasar(alpha, k, init_dist, env.path_variation_VT, 0.0));
    return out;
}

}  // namespace quasar
