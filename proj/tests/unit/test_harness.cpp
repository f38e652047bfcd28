#include <doctest.h>

#include <cmath>

#include "dhclab/harness.hpp"

using namespace dhclab;

namespace {

struct Series {
    std::vector<Vector2d> pos;
    std::vector<VectorXd> u;
};

Series first_order(const Vector2d& xss, double tau, double dt, double duration) {
    Series s;
    const int N = static_cast<int>(std::lround(duration / dt));
    for (int k = 0; k <= N; ++k) {
        s.pos.push_back(xss * (1.0 - std::exp(-k * dt / tau)));
        if (k < N) s.u.push_back(VectorXd::Ones(2));
    }
    return s;
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("constant trajectory at the target") {
    const Vector2d target(3, 5);
    std::vector<Vector2d> pos(100, target);
    std::vector<VectorXd> u(99, VectorXd::Zero(2));
    const TrialMetrics m = compute_metrics(pos, u, 0.01, target);
    REQUIRE(m.stable);
    CHECK(*m.settling_time_s == 0.0);
    CHECK(m.control_effort == 0.0);
    CHECK(m.steady_state_error.norm() == 0.0);
    CHECK(m.overshoot == 0.0);
}

TEST_CASE("first-order response settles at tau ln 50") {
    const double dt = 0.001, tau = 0.1;
    const Vector2d xss(3, 5);
    const Series s = first_order(xss, tau, dt, 3.0);
    const TrialMetrics m = compute_metrics(s.pos, s.u, dt, xss);
    REQUIRE(m.stable);
    CHECK(std::abs(*m.settling_time_s - tau * std::log(50.0)) <= dt);
    CHECK(m.overshoot == 0.0);
    CHECK(m.control_effort == doctest::Approx(2.0 * std::round(*m.settling_time_s / dt)));
}

TEST_CASE("peak at 1.2 x_ss gives overshoot 0.2") {
    std::vector<Vector2d> pos;
    const int N = 1000;
    for (int k = 0; k <= N; ++k) {
        const double t = k * 0.01;
        // Rise to 1.2, then decay back to 1.0.
        const double z = t < 1.0 ? 1.2 * t : 1.0 + 0.2 * std::exp(-(t - 1.0) / 0.2);
        pos.emplace_back(0.0, z);
    }
    std::vector<VectorXd> u(N, VectorXd::Zero(2));
    const TrialMetrics m = compute_metrics(pos, u, 0.01, Vector2d(0, 1));
    REQUIRE(m.stable);
    CHECK(m.overshoot == doctest::Approx(0.2).epsilon(1e-6));
}

TEST_CASE("excursions inside the band are not overshoot") {
    std::vector<Vector2d> pos;
    for (int k = 0; k <= 1000; ++k) {
        const double t = k * 0.01;
        pos.emplace_back(0.0, t < 1.0 ? 1.01 * t : 1.0 + 0.01 * std::exp(-(t - 1.0)));
    }
    std::vector<VectorXd> u(1000, VectorXd::Zero(2));
    CHECK(compute_metrics(pos, u, 0.01, Vector2d(0, 1)).overshoot == 0.0);
}

TEST_CASE("translation consistency") {
    const double dt = 0.01;
    const Series s = first_order(Vector2d(3, 5), 0.3, dt, 5.0);
    const Vector2d offset(10, -20);
    std::vector<Vector2d> shifted;
    for (const auto& p : s.pos) shifted.push_back(p + offset);
    const TrialMetrics a = compute_metrics(s.pos, s.u, dt, Vector2d(3, 5));
    // The band is relative to |x_ss|, so shift with the band held fixed.
    const double band = 0.02 * a.x_steady.norm() / (a.x_steady + offset).norm();
    const TrialMetrics b = compute_metrics(shifted, s.u, dt, Vector2d(3, 5) + offset, band);
    REQUIRE(a.stable);
    REQUIRE(b.stable);
    CHECK(*a.settling_time_s == doctest::Approx(*b.settling_time_s));
    CHECK(a.control_effort == doctest::Approx(b.control_effort));
    CHECK((a.steady_state_error - b.steady_state_error).norm() <= 1e-9);
}

TEST_CASE("oscillating or diverged trajectories are unstable") {
    std::vector<Vector2d> pos;
    for (int k = 0; k <= 1000; ++k) pos.emplace_back(0.0, 1.0 + 0.5 * std::sin(0.3 * k));
    std::vector<VectorXd> u(1000, VectorXd::Zero(2));
    CHECK_FALSE(compute_metrics(pos, u, 0.01, Vector2d(0, 1)).stable);
    CHECK_FALSE(compute_metrics(pos, u, 0.01, Vector2d(0, 1), 0.02, 0.1, true).stable);
}

TEST_CASE("overshoot relative to target when x_ss is zero") {
    std::vector<Vector2d> pos;
    for (int k = 0; k <= 1000; ++k) pos.emplace_back(0.0, k == 10 ? -0.5 : (k < 10 ? 1.0 : 0.0));
    std::vector<VectorXd> u(1000, VectorXd::Zero(2));
    const TrialMetrics m = compute_metrics(pos, u, 0.01, Vector2d(0, 2));
    REQUIRE(m.stable);
    CHECK(m.overshoot_relative_to_target);
    CHECK(m.overshoot == doctest::Approx(0.25));
}

}

TEST_SUITE("harness") {

TEST_CASE("nominal MPC tracks without bias") {
    TrialConfig cfg;
    const Trajectory tr = run_trial(cfg, ControllerKind::Mpc, kNominalQuad);
    const TrialMetrics m = compute_metrics(tr, cfg.reference.target);
    REQUIRE(m.stable);
    CHECK(m.steady_state_error(0) <= 1e-3);
    CHECK(m.steady_state_error(1) <= 1e-3);
}

TEST_CASE("nominal plant: every controller settles on target") {
    TrialConfig cfg;
    for (ControllerKind k : all_controllers()) {
        CAPTURE(to_string(k));
        const TrialMetrics m = compute_metrics(run_trial(cfg, k, kNominalQuad), cfg.reference.target);
        CHECK(m.stable);
        CHECK(m.steady_state_error.maxCoeff() <= 0.05);
    }
}

TEST_CASE("heavier vehicle leaves standalone MPC short of the target") {
    TrialConfig cfg;
    const TrialMetrics m = compute_metrics(run_trial(cfg, ControllerKind::Mpc, {0.045, 1.43e-5}),
                                           cfg.reference.target);
    REQUIRE(m.stable);
    CHECK(m.steady_state_error(1) > 0.1);
    CHECK(m.x_steady(1) < cfg.reference.target(1));  // sags under the extra weight
}

TEST_CASE("trajectories are bit-identical across runs") {
    TrialConfig cfg;
    cfg.duration = 5.0;
    const QuadParams q = trial_parameters(case_from_name("c2"), 1, 3);
    for (ControllerKind k : all_controllers()) {
        CHECK(trajectory_csv(run_trial(cfg, k, q)) == trajectory_csv(run_trial(cfg, k, q)));
    }
}

TEST_CASE("trial parameters depend on seed, case and index only") {
    const PerturbationCase c2 = case_from_name("c2");
    const QuadParams a = trial_parameters(c2, 1, 4);
    const QuadParams b = trial_parameters(c2, 1, 4);
    CHECK(a.m == b.m);
    CHECK(a.Ixx == b.Ixx);
    CHECK(trial_parameters(c2, 1, 5).m != a.m);
    CHECK(trial_parameters(case_from_name("c1"), 1, 4).m != a.m);
    CHECK_THROWS_AS(case_from_name("c3"), std::invalid_argument);
}

TEST_CASE("comparison output does not depend on the worker count") {
    TrialConfig cfg;
    cfg.duration = 4.0;
    const auto a = controller_comparison("c1", case_from_name("c1"), 3, 7, cfg, 1);
    const auto b = controller_comparison("c1", case_from_name("c1"), 3, 7, cfg, 4);
    CHECK(metrics_csv(a.rows) == metrics_csv(b.rows));
    CHECK(a.rows.size() == 4);
}

TEST_CASE("config validation") {
    TrialConfig cfg;
    cfg.control_horizon = 20;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = TrialConfig{};
    cfg.dt = 0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("reference profiles") {
    ReferenceProfile r;
    CHECK(r.at(0.0).norm() == 0.0);
    CHECK(r.at(5.0).isApprox(Vector2d(1.5, 2.5)));
    CHECK(r.at(50.0) == r.target);
    r.kind = ReferenceKind::Step;
    CHECK(r.at(0.0) == r.target);
    r.kind = ReferenceKind::MinimumJerk;
    CHECK(r.at(5.0).isApprox(Vector2d(1.5, 2.5)));
    CHECK(r.at(10.0).isApprox(r.target));
}

TEST_CASE("csv formatting") {
    CHECK(format_number(0.1) == "0.1");
    CHECK(format_number(1.0 / 3.0) == "0.333333333333");
    CHECK(format_number(std::nan("")) == "nan");
    std::vector<BoundsCampaignRow> rows(1);
    CHECK(bounds_csv(rows).rfind("sigma,mean_empirical,mean_tight,mean_loose,discarded\n", 0) == 0);
    std::vector<ComparisonRow> mrows(1);
    mrows[0].case_name = "c1";
    mrows[0].controller = ControllerKind::Dhc;
    CHECK(metrics_csv(mrows) ==
          "case,controller,settling_time,effort,err_y,err_z,overshoot,unstable_count\nc1,DHC,0,0,0,0,0,0\n");
}

}
