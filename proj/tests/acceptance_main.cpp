// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// criterion fails. Thresholds and tolerances are pinned in code.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <future>
#include <string>
#include <vector>

#include "quasar/core.hpp"
#include "quasar/experiment.hpp"
#include "quasar/runner.hpp"
#include "quasar/theory.hpp"
#include "quasar/verify.hpp"
#include "quasar/verify_suites.hpp"

using namespace quasar;

namespace {

int g_failures = 0;

void report(const std::string& name, bool ok, const std::string& details) {
    std::printf("[%s] %s: %s\n", ok ? "PASS" : "FAIL", name.c_str(), details.c_str());
    std::fflush(stdout);
    if (!ok) ++g_failures;
}

double seconds_since(const std::chrono::steady_clock::time_point& start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// Replays the exact input streams a run will draw (they do not depend on the
// step size) and returns the empirical max ||x||^2, trial 0.
double measure_run_input_bound(const ExperimentConfig& cfg) {
    SeededRng env_rng(mix_seed(cfg.seed, detail::kEnvStream));
    const EnvTrace env = generate_env(DriftConfig{cfg.T, cfg.n, cfg.drift_scale, cfg.drift_exponent, 0}, env_rng);
    GlmProblem p{cfg.make_activation(), cfg.n, env.true_params, cfg.m, cfg.noise_std};
    GlmProblem eval_p = p;
    eval_p.sample_count = cfg.eval_m;
    eval_p.label_noise_std = 0.0;
    const std::uint64_t run_seed = mix_seed(cfg.seed, 0);
    double c = 0.0;
    for (std::size_t t = 0; t < cfg.T; ++t) {
        SeededRng train_rng(mix_seed(run_seed, train_stream_tag(t)));
        for (const Vector& x : sample_batch(p, t, train_rng, cfg.noisy()).inputs) {
            c = std::max(c, squared_norm(x));
        }
        SeededRng eval_rng(mix_seed(run_seed, eval_stream_tag(t)));
        for (const Vector& x : sample_batch(eval_p, t, eval_rng, false).inputs) {
            c = std::max(c, squared_norm(x));
        }
    }
    return c;
}

std::string c1_first_csv;  // reused by the determinism criterion

void criterion_1_reference_runs() {
    const double kSublinearFactor = 0.6;
    const double kTimeLimitSec = 120.0;
    bool ok = true;
    std::string details;
    for (const char* name : {"leaky_relu_default", "logistic_default", "relu_default"}) {
        for (bool noisy : {false, true}) {
            const auto start = std::chrono::steady_clock::now();
            const ExperimentConfig cfg = ExperimentConfig::preset(name, noisy);
            const ExperimentResult res = run_experiment(cfg);
            const double secs = seconds_since(start);
            const std::size_t T = cfg.T;
            const double avg_T = res.records[0].cum_regret[T - 1] / static_cast<double>(T);
            const double avg_q = res.records[0].cum_regret[T / 4 - 1] / static_cast<double>(T / 4);
            const bool sub = avg_T <= kSublinearFactor * avg_q;
            const bool fast = secs < kTimeLimitSec;
            ok = ok && sub && fast;
            details += std::string(name) + (noisy ? "+noise" : "") +
                       " ratio=" + format_double(avg_T / avg_q) + " t=" + format_double(secs) + "s; ";
            if (std::string(name) == "leaky_relu_default" && !noisy) c1_first_csv = res.csv;
        }
    }
    report("C1 reference-scale runs sublinear (avg regret factor <= 0.6, < 2 min each)", ok, details);
}

void criterion_2_bound_dominance() {
    const int kSeeds = 20, kNeeded = 19;
    auto leaky_seed_ok = [](int seed) {
        ExperimentConfig cfg = ExperimentConfig::preset("leaky_relu_default", false);
        cfg.seed = static_cast<std::uint64_t>(seed);
        const double c = measure_run_input_bound(cfg);
        QuasarConstants k;
        k.rho = cfg.kappa;
        k.mu = cfg.kappa;  // lambda = 1 for standard Gaussian inputs
        k.gamma_ws = 2.0 * c;
        cfg.alpha = 0.5 * step_size_max_strong(k);
        const ExperimentResult res = run_experiment(cfg);
        return res.bounds.at("alpha_admissible").get<bool>() && res.bounds.at("bound_dominates").get<bool>();
    };
    auto logistic_seed_ok = [](int seed) {
        ExperimentConfig cfg = ExperimentConfig::preset("logistic_default", false);
        cfg.seed = static_cast<std::uint64_t>(seed);
        const double rho = 2.0 * std::exp(-2.0 * *cfg.projection_radius);
        cfg.alpha = 0.5 * 2.0 * rho / 0.125;  // half of 2*rho/Gamma
        const ExperimentResult res = run_experiment(cfg);
        return res.bounds.at("alpha_admissible").get<bool>() && res.bounds.at("bound_dominates").get<bool>();
    };

    // fan the seeds across two workers
    auto count_ok = [&](bool leaky) {
        std::vector<std::future<bool>> futs;
        futs.reserve(kSeeds);
        for (int seed = 1; seed <= kSeeds; ++seed) {
            futs.push_back(std::async(std::launch::async, [&, seed] {
                return leaky ? leaky_seed_ok(seed) : logistic_seed_ok(seed);
            }));
            if (futs.size() % 2 == 0) {
                futs[futs.size() - 2].wait();
            }
        }
        int n_ok = 0;
        for (auto& f : futs) n_ok += f.get() ? 1 : 0;
        return n_ok;
    };
    const int leaky_ok = count_ok(true);
    const int logistic_ok = count_ok(false);
    report("C2 bound dominance on >= 19/20 seeds (leaky strong-quasar, logistic weak-smooth)",
           leaky_ok >= kNeeded && logistic_ok >= kNeeded,
           "leaky " + std::to_string(leaky_ok) + "/20, logistic " + std::to_string(logistic_ok) + "/20");
}

void criterion_3_offline_contraction() {
    const std::size_t n = 10, pool = 100000, steps = 50;
    SeededRng ws_rng(301);
    const Vector wstar = gaussian_vector(ws_rng, n);
    SeededRng pool_rng(302);
    const GlmMcOracle mc(Activation::leaky(0.1), wstar, pool, pool_rng);
    QuasarConstants k;
    k.rho = 0.1;
    k.mu = 0.1;  // kappa * lambda with lambda = 1
    k.gamma_ws = 2.0 * mc.max_input_sq();
    const double alpha = 0.5 * step_size_max_strong(k);
    const OracleFn f = mc.to_oracle(k);
    const CheckReport rep = check_offline_contraction(
        f, alpha, SamplingSpec::in_ball(BallRegion(wstar, 3.0), 1, 303), steps, 0.0);
    report("C3 offline contraction: 50 MC-oracle steps stay below gamma + 3 SE",
           rep.passed && rep.points_tested == steps,
           "steps=" + std::to_string(rep.points_tested) + " violations=" + std::to_string(rep.violations.size()) +
               " gamma=" + format_double(gamma_contraction(alpha, k)));
}

void criterion_4_definition_suites() {
    const auto start = std::chrono::steady_clock::now();
    const std::vector<std::string> positive = {"quasar", "strong_quasar", "weak_smoothness", "error_bound_qg"};
    const std::vector<std::string> controls = {"strong_quasar_negative_control",
                                               "weak_smoothness_negative_control",
                                               "error_bound_qg_negative_control", "quasar_negative_control"};
    bool ok = true;
    std::string details;
    for (const char* act : {"leaky_relu", "logistic", "relu"}) {
        ExperimentConfig cfg;
        cfg.activation = act;
        cfg.n = 10;
        cfg.seed = 404;
        std::vector<std::string> suites = positive;
        suites.insert(suites.end(), controls.begin(), controls.end());
        const VerifyOutcome out = cmd_verify(cfg, suites);
        std::size_t applicable = 0, control_fails = 0, controls_total = 0;
        for (const VerifyEntry& e : out.entries) {
            if (!e.report.applicable) continue;
            if (e.expected_fail) {
                ++controls_total;
                control_fails += e.report.passed ? 0 : 1;
            } else {
                ++applicable;
                ok = ok && e.report.passed;
            }
        }
        ok = ok && control_fails == controls_total && controls_total > 0;
        details += std::string(act) + " pos=" + std::to_string(applicable) + " ctrl=" +
                   std::to_string(control_fails) + "/" + std::to_string(controls_total) + "; ";
    }
    const double secs = seconds_since(start);
    ok = ok && secs < 300.0;
    report("C4 definition suites pass at tol_mc on 1e3 points; every negative control fails; < 5 min",
           ok, details + "t=" + format_double(secs) + "s");
}

void criterion_5_gradient_oracle() {
    bool ok = true;
    std::string details;
    for (const char* act : {"leaky_relu", "logistic", "relu"}) {
        ExperimentConfig cfg;
        cfg.activation = act;
        cfg.n = 10;
        cfg.seed = 505;
        const VerifyOutcome out = cmd_verify(cfg, {"fd_gradient"});
        const CheckReport& rep = out.entries.at(0).report;
        ok = ok && rep.passed && rep.points_tested == 100;
        details += std::string(act) + " points=" + std::to_string(rep.points_tested) + " excl=" +
                   std::to_string(rep.points_excluded) + "; ";
    }
    report("C5 finite-difference gradient oracle at 1e-5 relative on 100 kink-free points", ok, details);
}

void criterion_6_smoothness_implies_weak_smoothness() {
    SeededRng rng(606);
    bool ok = true;
    for (double L : {0.1, 1.0, 10.0}) {
        const Vector ws = gaussian_vector(rng, 6);
        const OracleFn f = quadratic_oracle(ws, L, QuasarConstants{1.0, L, 2.0 * L, {}, {}, {}, {}, {}});
        const SamplingSpec pts = SamplingSpec::in_ball(BallRegion(ws, 2.0), 300, mix_seed(606, (uint64_t)(L * 10)));
        ok = ok && check_weak_smoothness(f, 2.0 * L, pts, 1e-9).passed;
        ok = ok && !check_weak_smoothness(f, 1.9 * L, pts, 1e-9).passed;
    }
    report("C6 L-smooth quadratics: weak smoothness holds at Gamma = 2L (1e-9), fails at 1.9L", ok,
           "L in {0.1, 1, 10}");
}

void criterion_7_step_size_consistency() {
    SeededRng rng(707);
    std::size_t violations = 0;
    for (int i = 0; i < 10000; ++i) {
        QuasarConstants k;
        k.rho = 0.02 + 0.98 * rng.uniform();
        k.mu = std::exp(rng.normal(0.0, 1.5));
        k.gamma_ws = std::exp(rng.normal(0.5, 1.5));
        if (step_size_sufficient(k) > step_size_max_strong(k)) ++violations;
    }
    report("C7 sufficient step size <= sharp step size on 1e4 random certificates",
           violations == 0, "violations=" + std::to_string(violations));
}

void criterion_8_basin_persistence() {
    const auto start = std::chrono::steady_clock::now();
    const ReluBasinStudy study = build_relu_basin_study(10, 200, 1000, 0.1, 808, 20);
    BasinPersistenceOptions opts;
    opts.trials = 20;
    opts.tau = 0.01;
    opts.init_radius_frac = 1e-9;
    SeededRng rng(808);
    const CheckReport rep = check_relu_basin_persistence(study.problem, study.alpha, study.constants, rng, opts);
    const double secs = seconds_since(start);
    report("C8 ReLU basin persistence: in-basin fraction >= 0.99 at tau = 0.01, < 1 min",
           rep.applicable && rep.passed && secs < 60.0, rep.note + " t=" + format_double(secs) + "s");
}

void criterion_9_determinism() {
    const ExperimentConfig cfg = ExperimentConfig::preset("leaky_relu_default", false);
    const ExperimentResult again = run_experiment(cfg);
    report("C9 repeated preset run is byte-identical",
           !c1_first_csv.empty() && again.csv == c1_first_csv,
           "csv bytes=" + std::to_string(again.csv.size()));
}

}  // namespace

int main() {
    criterion_1_reference_runs();
    criterion_2_bound_dominance();
    criterion_3_offline_contraction();
    criterion_4_definition_suites();
    criterion_5_gradient_oracle();
    criterion_6_smoothness_implies_weak_smoothness();
    criterion_7_step_size_consistency();
    criterion_8_basin_persistence();
    criterion_9_determinism();
    std::printf("%d criterion(s) failed\n", g_failures);
    return g_failures == 0 ? 0 : 1;
}
