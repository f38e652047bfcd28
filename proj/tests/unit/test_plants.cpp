#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "dhclab/plants.hpp"

using namespace dhclab;

namespace {

VectorXd v2(double a, double b) {
    VectorXd v(2);
    v << a, b;
    return v;
}

}  // namespace

TEST_SUITE("plants") {

TEST_CASE("toy plant steps") {
    const LinearPlant p = toy_plant();
    CHECK((step(p, v2(0.01, 0.01), VectorXd::Zero(1)) - v2(0.03, 0.07)).norm() <= 1e-15);
    CHECK((step(p, v2(0, 0), VectorXd::Ones(1)) - v2(1, 0.7)).norm() <= 1e-15);
    CHECK((step(p, v2(1, 1), VectorXd::Ones(1)) - v2(4, 7.7)).norm() <= 1e-14);
    CHECK(p.dt == 1.0);
}

TEST_CASE("quadrotor continuous model") {
    const ContinuousLinearModel c = quadrotor_continuous(0.03, 1.43e-5);
    CHECK(c.Bc(kVz, 0) == doctest::Approx(1.0 / 0.03));
    CHECK(c.Bc(kDphi, 1) == doctest::Approx(1.0 / 1.43e-5));
    VectorXd pitch = VectorXd::Zero(6);
    pitch(kPhi) = 1;
    CHECK((c.Ac * pitch)(kVy) == doctest::Approx(-9.8));
    VectorXd vel = VectorXd::Zero(6);
    vel.tail(3).setOnes();
    CHECK((c.Ac * vel).head(3).isApprox(VectorXd::Ones(3)));
    CHECK_THROWS_AS(quadrotor_continuous(0.0, 1e-5), std::invalid_argument);
    CHECK_THROWS_AS(quadrotor_continuous(0.03, -1.0), std::invalid_argument);
}

TEST_CASE("discretize: integrator and scalar decay") {
    ContinuousLinearModel integ{MatrixXd::Zero(2, 2), MatrixXd::Identity(2, 2), {}};
    const LinearPlant p = discretize(integ, 0.5);
    CHECK((p.Ad - MatrixXd::Identity(2, 2)).norm() <= 1e-15);
    CHECK((p.Bd - 0.5 * MatrixXd::Identity(2, 2)).norm() <= 1e-15);

    ContinuousLinearModel decay{MatrixXd::Constant(1, 1, -1.0), MatrixXd::Ones(1, 1), {}};
    CHECK(discretize(decay, 1.0).Ad(0, 0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
    CHECK_THROWS(discretize(decay, 0.0));
}

TEST_CASE("discretize: closed-form ZOH entry of the pitch chain") {
    const LinearPlant p = quadrotor_plant(kNominalQuad, 0.01);
    CHECK(p.Ad(kY, kPhi) == doctest::Approx(-9.8 * 0.01 * 0.01 / 2).epsilon(1e-12));
}

TEST_CASE("ZOH step agrees with fine Euler integration") {
    const double dt = 0.01;
    const ContinuousLinearModel c = quadrotor_continuous(0.03, 1.43e-5);
    const LinearPlant p = discretize(c, dt);
    VectorXd x0(6);
    x0 << 0.3, -0.2, 0.05, 0.1, -0.4, 0.2;
    VectorXd u(2);
    u << 0.01, 2e-6;
    VectorXd x = x0;
    const int sub = 1000;
    for (int i = 0; i < sub; ++i) x += (dt / sub) * (c.Ac * x + c.Bc * u);
    const VectorXd zoh = step(p, x0, u);
    CHECK((zoh - x).norm() / zoh.norm() <= 1e-6);
}

TEST_CASE("nominal quadrotor is marginally stable open loop") {
    const LinearPlant p = quadrotor_plant(kNominalQuad, 0.01);
    Eigen::EigenSolver<MatrixXd> es(p.Ad);
    CHECK(es.eigenvalues().cwiseAbs().maxCoeff() <= 1.0 + 1e-9);
}

TEST_CASE("step is linear") {
    const LinearPlant p = quadrotor_plant({0.04, 2e-5}, 0.01);
    std::mt19937_64 rng(1);
    std::normal_distribution<double> n(0.0, 1.0);
    auto rv = [&](int k) { return VectorXd(VectorXd::NullaryExpr(k, [&] { return n(rng); })); };
    const VectorXd x1 = rv(6), x2 = rv(6), u1 = rv(2), u2 = rv(2);
    const VectorXd lhs = step(p, x1 + x2, u1 + u2);
    const VectorXd rhs = step(p, x1, u1) + step(p, x2, u2) - step(p, VectorXd::Zero(6), VectorXd::Zero(2));
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, lhs.cwiseAbs().maxCoeff()));
}

TEST_CASE("divergence detection") {
    VectorXd x = VectorXd::Zero(3);
    CHECK_FALSE(diverged(x));
    x(1) = 2e6;
    CHECK(diverged(x));
    x(1) = std::nan("");
    CHECK(diverged(x));
}

TEST_CASE("perturbation sampler") {
    std::mt19937_64 rng(1);
    const QuadParams zero = sample_perturbation({0.0, 0.0, 0}, rng);
    CHECK(zero.m == kNominalQuad.m);
    CHECK(zero.Ixx == kNominalQuad.Ixx);

    std::mt19937_64 a(42), b(42);
    const QuadParams pa = sample_perturbation(PerturbationCase::c1(), a);
    const QuadParams pb = sample_perturbation(PerturbationCase::c1(), b);
    CHECK(pa.m == pb.m);
    CHECK(pa.Ixx == pb.Ixx);

    std::mt19937_64 r(7);
    double sum = 0, sq = 0;
    const int N = 10000;
    for (int i = 0; i < N; ++i) {
        const QuadParams q = sample_perturbation(PerturbationCase::c2(), r);
        CHECK_UNARY(q.m > 0.0);
        CHECK_UNARY(q.Ixx > 0.0);
        sum += q.m;
        sq += q.m * q.m;
    }
    const double mean = sum / N;
    const double sd = std::sqrt(sq / N - mean * mean);
    // Rejection truncates the normal at zero; compare with the truncated-normal std.
    const double sigma = 0.6 * 0.03;
    const double lo = -0.03 / sigma;
    const double pdf = std::exp(-0.5 * lo * lo) / std::sqrt(2.0 * std::numbers::pi);
    const double lambda = pdf / (1.0 - 0.5 * std::erfc(-lo / std::sqrt(2.0)));
    const double sd_trunc = sigma * std::sqrt(1.0 + lo * lambda - lambda * lambda);
    CHECK(std::abs(sd - sd_trunc) <= 0.05 * sd_trunc);
    CHECK(mean == doctest::Approx(0.03 + sigma * lambda).epsilon(0.02));
}

TEST_CASE("hover actuation offsets thrust by the mass error") {
    VectorXd u(2);
    u << 0.1, 0.2;
    const VectorXd w = hover_actuation(u, 0.03, 0.05);
    CHECK(w(0) == doctest::Approx(0.1 + (0.03 - 0.05) * kGravity));
    CHECK(w(1) == 0.2);
}

}
