#include <doctest.h>

#include "helpers.hpp"

using namespace forestdsh;

TEST_CASE("constraint value examples") {
    const auto jd = th::example1();
    CHECK(constraint_value(jd, 0, 0, 0) == doctest::Approx(1.0));
    CHECK(std::abs(constraint_value(jd, 12.0791, 13.4206, 11.0959) - 1.0) <= 0.01);
    const auto u = th::uniform2();
    CHECK(constraint_value(u, 3.0, 5.0, 4.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(constraint_value(u, 1.2, 0.4, 0.8) == doctest::Approx(1.0).epsilon(1e-12));
    auto rng = make_rng(3);
    for (int t = 0; t < 50; ++t) {
        const double mu = 10 * uniform01(rng), nu = 10 * uniform01(rng), eta = std::min(mu, nu) * uniform01(rng);
        CHECK(constraint_value(jd, mu, nu, eta) == doctest::Approx(th::constraint_oracle(jd, mu, nu, eta)).epsilon(1e-9));
    }
}

TEST_CASE("constraint is increasing in eta") {
    const auto jd = named_distribution("massspec4");
    double prev = constraint_value(jd, 3, 4, 0);
    for (double eta = 0.1; eta <= 3.0; eta += 0.1) {
        const double v = constraint_value(jd, 3, 4, eta);
        CHECK(v > prev);
        prev = v;
    }
}

TEST_CASE("solver on the 2x2 example") {
    const auto jd = th::example1();
    const auto hp = solve_params(jd, ProblemDims{4, 4, 1});
    CHECK(hp.lambda == doctest::Approx(1.7203).epsilon(0.005 / 1.7203));
    CHECK(std::abs(constraint_value(jd, hp.mu, hp.nu, hp.eta) - 1.0) <= 1e-6);
    CHECK(hp.lambda == doctest::Approx(lambda_of(hp.mu, hp.nu, hp.eta, hp.delta)).epsilon(1e-12));
    CHECK(std::min(hp.mu, hp.nu) >= hp.eta);
    CHECK(hp.eta >= 0.0);
}

TEST_CASE("solver on the experiment endpoint") {
    const auto jd = th::p1();
    const auto hp = solve_params(jd, ProblemDims{2000, 2000, 1});
    // the reference triple is feasible; the solver must do at least as well
    CHECK(std::abs(th::constraint_oracle(jd, 4.6611, 4.6611, 3.1462) - 1.0) < 0.01);
    CHECK(hp.lambda >= lambda_of(4.6611, 4.6611, 3.1462, 1.0) - 0.005);
    CHECK(hp.mu == doctest::Approx(hp.nu).epsilon(0.02));
}

TEST_CASE("mass-spec fixtures") {
    CHECK(solve_params(named_distribution("massspec4"), ProblemDims{1000, 1000, 1}).lambda ==
          doctest::Approx(1.3267).epsilon(0.005 / 1.3267));
    CHECK(solve_params(named_distribution("massspec8"), ProblemDims{1000, 1000, 1}).lambda ==
          doctest::Approx(1.2948).epsilon(0.005 / 1.2948));
}

TEST_CASE("solved triples satisfy the invariants") {
    for (const char* name : {"example1", "p1", "p2", "massspec4"}) {
        for (ProblemDims d : {ProblemDims{1000, 1000, 1}, ProblemDims{1000, 100, 1}, ProblemDims{100, 1000, 1}}) {
            const auto jd = named_distribution(name);
            const auto hp = solve_params(jd, d);
            CAPTURE(name);
            CHECK(hp.residual <= 1e-6);
            CHECK(std::abs(constraint_value(jd, hp.mu, hp.nu, hp.eta) - 1.0) <= 1e-6);
            CHECK(hp.lambda >= std::max(1.0, hp.delta) - 1e-12);
            CHECK(hp.lambda <= 1.0 + hp.delta + 1e-12);
            double rs = 0.0;
            for (std::size_t i = 0; i < jd.k(); ++i) {
                for (std::size_t j = 0; j < jd.l(); ++j) {
                    const double p = jd.p(i, j);
                    const double want = p > 0 ? std::pow(p, 1 + hp.mu + hp.nu - hp.eta) * std::pow(jd.pa(i), -hp.mu) *
                                                    std::pow(jd.pb(j), -hp.nu)
                                              : 0.0;
                    CHECK(hp.r_star(i, j) == doctest::Approx(want).epsilon(1e-9));
                    rs += hp.r_star(i, j);
                }
            }
            CHECK(std::abs(rs - 1.0) <= 1e-6);
        }
    }
}

TEST_CASE("uniform distribution approaches brute force") {
    const auto hp = solve_params(th::uniform2(), ProblemDims{1000, 1000, 1}, SolverOptions::uniform(10.0, 0.1, 0.05));
    CHECK(hp.lambda >= 1.9);
}

TEST_CASE("lambda does not depend on symbol order") {
    const auto jd = named_distribution("massspec4");
    const std::vector<std::size_t> rows{2, 0, 3, 1}, cols{3, 1, 0, 2};
    const auto a = solve_params(jd, ProblemDims{500, 500, 1});
    const auto b = solve_params(jd.permuted(rows, cols), ProblemDims{500, 500, 1});
    CHECK(a.lambda == doctest::Approx(b.lambda).epsilon(1e-9));
}

TEST_CASE("p0 and q0") {
    const auto e = compute_p0_q0(th::example1());
    CHECK(e.p0 == doctest::Approx(0.0024));
    CHECK(e.q0 == doctest::Approx(0.00275625));
    CHECK(e.log_q0 == doctest::Approx(std::log(0.00275625)));
    const auto u = compute_p0_q0(th::uniform2());
    CHECK(u.p0 == doctest::Approx(0.00390625));
    CHECK(u.q0 == doctest::Approx(0.00390625));
    const auto one = compute_p0_q0(JointDistribution::from_matrix(Matrix::from_rows({{1.0}})));
    CHECK(one.p0 == 1.0);
    CHECK(one.q0 == 1.0);
}

TEST_CASE("noise complexity bound") {
    const auto jd = th::example1();
    const auto hp = solve_params(jd, ProblemDims{4, 4, 1});
    CHECK(noise_complexity_bound(hp, jd, 0.0) == hp.lambda);
    // max over cells of min(p/pA, p/pB) = max(min(4/7, .8), min(3/7, .6), min(1/3, .2), min(2/3, .4)) = 4/7
    CHECK(max_min_conditional(jd) == doctest::Approx(4.0 / 7.0));
    const double cd = (hp.lambda - 1.0) / std::abs(std::log(4.0 / 7.0));
    CHECK(noise_complexity_bound(hp, jd, 0.03) == doctest::Approx(hp.lambda + 3 * cd * std::log(1.03)));
    CHECK(noise_complexity_bound(1.5, 1.0, std::exp(-1.0), std::exp(1.0) - 1.0) == doctest::Approx(3.0));
    const auto diag = JointDistribution::from_matrix(Matrix::from_rows({{0.5, 0.0}, {0.0, 0.5}}));
    CHECK_CODE(noise_complexity_bound(1.5, 1.0, max_min_conditional(diag), 0.1), ErrorCode::DegenerateRatio);
}

TEST_CASE("infeasible grid") {
    SolverOptions o;
    o.grid_mu = {5.0};
    o.grid_nu = {5.0};
    o.grid_eta = {0.0};
    o.tolerance = 0.01;
    CHECK_CODE(solve_params(th::example1(), ProblemDims{4, 4, 1}, o), ErrorCode::NoFeasiblePoint);
}
