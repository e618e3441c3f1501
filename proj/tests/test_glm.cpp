#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "quasar/core.hpp"
#include "quasar/env.hpp"
#include "quasar/glm.hpp"

using namespace quasar;
using Catch::Approx;

TEST_CASE("activation values") {
    const Activation leaky = Activation::leaky(0.1);
    CHECK(activation_eval(leaky, -3.0) == Approx(-0.3).epsilon(1e-15));
    CHECK(activation_eval(leaky, 2.0) == 2.0);

    const Activation logi = Activation::logistic();
    CHECK(activation_eval(logi, 0.0) == 0.5);
    CHECK(activation_eval(logi, 10.0) == Approx(0.9999546021312976).epsilon(1e-14));
    CHECK(activation_eval(logi, -10.0) == Approx(1.0 - 0.9999546021312976).epsilon(1e-10));

    const Activation relu = Activation::relu();
    CHECK(activation_eval(relu, -1.5) == 0.0);
    CHECK(activation_eval(relu, 1.5) == 1.5);

    CHECK_THROWS_AS(Activation::leaky(0.0), std::invalid_argument);
    CHECK_THROWS_AS(Activation::leaky(1.5), std::invalid_argument);
}

TEST_CASE("clarke selections") {
    const Activation leaky = Activation::leaky(0.1);
    CHECK(clarke_subgrad(leaky, -1.0) == 0.1);
    CHECK(clarke_subgrad(leaky, 1.0) == 1.0);
    CHECK(clarke_subgrad(leaky, 0.0) == 1.0);  // kink selection

    const Activation logi = Activation::logistic();
    CHECK(clarke_subgrad(logi, 0.0) == 0.25);
    CHECK(clarke_subgrad(logi, 3.0) == Approx(std::exp(-3.0) / std::pow(1.0 + std::exp(-3.0), 2)).epsilon(1e-14));

    const Activation relu = Activation::relu();
    CHECK(clarke_subgrad(relu, 0.0) == 0.0);  // kink selection
    CHECK(clarke_subgrad(relu, -2.0) == 0.0);
    CHECK(clarke_subgrad(relu, 2.0) == 1.0);
}

TEST_CASE("empirical loss and gradient on a single identity-activation sample") {
    // kappa = 1 makes the model linear: x = e1, wstar = 2*e1, w = e1
    const Activation id = Activation::leaky(1.0);
    SampleBatch batch;
    batch.inputs = {{1.0, 0.0}};
    batch.labels = {2.0};
    const Vector w{1.0, 0.0};
    CHECK(empirical_loss(id, w, batch) == Approx(0.5).epsilon(1e-15));
    const Vector g = empirical_gradient(id, w, batch);
    CHECK(g[0] == Approx(-1.0).epsilon(1e-15));
    CHECK(g[1] == 0.0);
}

TEST_CASE("perfect fit gives zero loss and zero gradient") {
    SeededRng rng(3);
    GlmProblem p{Activation::leaky(0.1), 6, {gaussian_vector(rng, 6)}, 40, 0.0};
    const SampleBatch batch = sample_batch(p, 0, rng, false);
    CHECK(empirical_loss(p.activation, p.true_params[0], batch) == 0.0);
    const Vector g = empirical_gradient(p.activation, p.true_params[0], batch);
    CHECK(norm(g) == 0.0);
}

TEST_CASE("loss is invariant to permuting the batch") {
    SeededRng rng(4);
    GlmProblem p{Activation::logistic(), 5, {gaussian_vector(rng, 5)}, 30, 0.0};
    SampleBatch batch = sample_batch(p, 0, rng, false);
    const Vector w = gaussian_vector(rng, 5);
    const double before = empirical_loss(p.activation, w, batch);
    std::reverse(batch.inputs.begin(), batch.inputs.end());
    std::reverse(batch.labels.begin(), batch.labels.end());
    CHECK(empirical_loss(p.activation, w, batch) == Approx(before).epsilon(1e-15));
}

TEST_CASE("dimension mismatch is rejected") {
    SampleBatch batch;
    batch.inputs = {{1.0, 0.0}};
    batch.labels = {1.0};
    CHECK_THROWS_AS(empirical_loss(Activation::relu(), Vector{1.0, 0.0, 0.0}, batch), std::invalid_argument);
    CHECK_THROWS_AS(empirical_gradient(Activation::relu(), Vector{1.0}, batch), std::invalid_argument);
}

TEST_CASE("population gradient vanishes exactly at the optimum") {
    SeededRng rng(5);
    GlmProblem p{Activation::relu(), 8, {gaussian_vector(rng, 8)}, 10, 0.0};
    const Vector g = population_gradient_mc(p, 0, p.true_params[0], rng, 2000);
    CHECK(norm(g) == 0.0);  // every residual is exactly zero
}

TEST_CASE("population gradient matches the linear closed form within 3 SE") {
    // identity activation with N(0, I) inputs: grad f(w) = w - wstar, and the
    // per-sample gradient covariance trace is (n+1)*||d||^2 by Isserlis
    const std::size_t n = 10, n_mc = 100000;
    SeededRng rng(6);
    const Vector wstar = gaussian_vector(rng, n);
    GlmProblem p{Activation::leaky(1.0), n, {wstar}, 10, 0.0};
    const Vector w = gaussian_vector(rng, n);
    const Vector d = sub(w, wstar);

    SeededRng mc1(100), mc2(200);
    const Vector g1 = population_gradient_mc(p, 0, w, mc1, n_mc);
    const Vector g2 = population_gradient_mc(p, 0, w, mc2, n_mc);

    const double se = std::sqrt((static_cast<double>(n) + 1.0) * squared_norm(d) / n_mc);
    CHECK(distance(g1, d) <= 3.0 * se);
    CHECK(distance(g2, d) <= 3.0 * se);
    CHECK(distance(g1, g2) <= 3.0 * std::sqrt(2.0) * se);  // independent-seed self-consistency
}

TEST_CASE("derive_constants for leaky ReLU") {
    GlmProblem p{Activation::leaky(0.1), 3, {Vector{1, 0, 0}}, 10, 0.0};
    DistributionInfo dist;
    dist.min_eig_lambda = 1.0;
    dist.input_sq_bound_c = 1.0;
    const QuasarConstants k = derive_constants(p, dist, BallRegion(Vector(3, 0.0), 2.0));
    CHECK(k.rho == Approx(0.1).epsilon(1e-15));
    CHECK(*k.mu == Approx(0.1).epsilon(1e-15));
    CHECK(*k.gamma_ws == Approx(2.0).epsilon(1e-15));
    CHECK(*k.lip_K == 1.0);
    CHECK(*k.grad_bound_M == Approx(2.0).epsilon(1e-15));  // c * R

    DistributionInfo missing;
    missing.input_sq_bound_c = 1.0;
    CHECK_THROWS_AS(derive_constants(p, missing, BallRegion(Vector(3, 0.0), 2.0)), std::invalid_argument);
}

TEST_CASE("derive_constants for logistic") {
    GlmProblem p{Activation::logistic(), 3, {Vector{1, 0, 0}}, 10, 0.0};
    // ball radius 1 -> region diameter R = 2
    const QuasarConstants k = derive_constants(p, DistributionInfo{}, BallRegion(Vector(3, 0.0), 1.0));
    CHECK(k.rho == Approx(0.2706705664732254).epsilon(1e-14));
    CHECK(*k.gamma_ws == 0.125);
    CHECK(*k.lip_K == 0.25);
    CHECK(*k.input_bound_c == 1.0);
    CHECK_FALSE(k.mu.has_value());
}

TEST_CASE("derive_constants for ReLU") {
    GlmProblem p{Activation::relu(), 3, {Vector{3, 0, 0}, Vector{4, 0, 0}}, 10, 0.0};
    DistributionInfo dist;
    dist.input_sq_bound_c = 1.0;
    dist.eps = 1.0;
    dist.beta = 0.05;
    const QuasarConstants k = derive_constants(p, dist, ReluBasinHint{});
    CHECK(k.rho == Approx(2.4767604340798002e-4).epsilon(1e-12));
    CHECK(*k.mu == 1.0);
    CHECK(*k.grad_bound_M == Approx(4.0).epsilon(1e-15));  // c * max_t ||wstar_t||

    CHECK_THROWS_AS(derive_constants(p, dist, BallRegion(Vector(3, 0.0), 1.0)), std::invalid_argument);
}

TEST_CASE("standard gaussian distribution info") {
    const DistributionInfo d = DistributionInfo::standard_gaussian(42.0);
    CHECK(*d.min_eig_lambda == 1.0);
    CHECK(*d.input_sq_bound_c == 42.0);
    CHECK(*d.beta == Approx(0.09653235263005391).epsilon(1e-14));  // exp(-1/2)/(2*pi)
}

TEST_CASE("relu basin membership") {
    const Vector wstar{2.0, 0.0};
    CHECK(relu_basin_contains(wstar, wstar));
    CHECK(relu_basin_contains(wstar, Vector{0.0, 0.0}));       // boundary of the first inequality
    CHECK_FALSE(relu_basin_contains(wstar, Vector{6.0, 0.0}));  // 3*wstar violates the norm cap
    CHECK_FALSE(relu_basin_contains(wstar, Vector{2.0, 2.1}));
}

TEST_CASE("subgradient bound audit") {
    SeededRng rng(11);
    const SubgradBoundReport leaky_ok = subgrad_bound_check(Activation::leaky(0.3), 1.0, 5000, rng);
    CHECK(leaky_ok.passed);

    SeededRng rng2(12);
    const SubgradBoundReport logi_ok = subgrad_bound_check(Activation::logistic(), 0.25, 5000, rng2);
    CHECK(logi_ok.passed);

    // independent dense-grid oracle for the logistic slope supremum
    double sup = 0.0;
    for (double z = -20.0; z <= 20.0; z += 1e-3) sup = std::max(sup, clarke_subgrad(Activation::logistic(), z));
    CHECK(sup == Approx(0.25).margin(1e-7));

    SeededRng rng3(13);
    const SubgradBoundReport logi_bad = subgrad_bound_check(Activation::logistic(), 0.2, 5000, rng3);
    CHECK_FALSE(logi_bad.passed);
    REQUIRE_FALSE(logi_bad.subgrad_violations.empty());
    CHECK(std::abs(logi_bad.subgrad_violations.front().z) < 3.0);  // slope max sits at the origin
}
