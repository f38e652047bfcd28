#include <doctest.h>

#include <random>

#include "dhclab/dmdc.hpp"
#include "dhclab/plants.hpp"

using namespace dhclab;

namespace {

SnapshotBuffer toy_run(int snapshots, std::uint64_t seed) {
    const LinearPlant toy = toy_plant();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    SnapshotBuffer buf(2, 1);
    VectorXd x(2);
    x << 0.01, 0.01;
    for (int k = 0; k + 1 < snapshots; ++k) {
        VectorXd uk = VectorXd::Constant(1, u(rng));
        buf.push(x, uk);
        x = step(toy, x, uk);
    }
    buf.push(x);
    return buf;
}

}  // namespace

TEST_SUITE("dmdc") {

TEST_CASE("assemble stacks states and inputs") {
    SnapshotBuffer buf(2, 1);
    VectorXd x(2), u(1);
    x << 1, 1;
    u << 1;
    buf.push(x, u);
    x << 4, 8;
    u << 2;
    buf.push(x, u);
    x << 21, 44;
    buf.push(x);
    const DataMatrices d = assemble_matrices(buf);
    CHECK(d.Xi.cols() == 2);
    CHECK(d.Xi_P(0, 1) == 21);
    CHECK(d.Omega.rows() == 3);
    CHECK(d.Omega(2, 1) == 2);
}

TEST_CASE("assemble rejects a single snapshot") {
    SnapshotBuffer buf(2, 1);
    buf.push(VectorXd::Zero(2));
    CHECK_THROWS_AS(assemble_matrices(buf), std::invalid_argument);
}

TEST_CASE("push rejects wrong dimensions") {
    SnapshotBuffer buf(2, 1);
    CHECK_THROWS_AS(buf.push(VectorXd::Zero(3)), std::invalid_argument);
    CHECK_THROWS_AS(buf.push(VectorXd::Zero(2), VectorXd::Zero(2)), std::invalid_argument);
}

TEST_CASE("exact recovery from three input steps") {
    const LinearPlant toy = toy_plant();
    SnapshotBuffer buf(2, 1);
    VectorXd x(2);
    x << 1, 1;
    for (double u : {1.0, 2.0, 2.0}) {
        const VectorXd uk = VectorXd::Constant(1, u);
        buf.push(x, uk);
        x = step(toy, x, uk);
    }
    buf.push(x);
    const IdentifiedModel m = fit(assemble_matrices(buf));
    MatrixXd A(2, 2), B(2, 1);
    A << 1, 2, 3, 4;
    B << 1, 0.7;
    CHECK((m.A_hat - A).cwiseAbs().maxCoeff() <= 1e-8);
    CHECK((m.B_hat - B).cwiseAbs().maxCoeff() <= 1e-8);
    CHECK(m.numeric_rank == 3);
}

TEST_CASE("exact recovery from random excitation") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const IdentifiedModel m = fit(assemble_matrices(toy_run(4, seed)));
        const LinearPlant toy = toy_plant();
        CHECK((m.A_hat - toy.Ad).cwiseAbs().maxCoeff() <= 1e-8);
        CHECK((m.B_hat - toy.Bd).cwiseAbs().maxCoeff() <= 1e-8);
    }
}

TEST_CASE("pseudoinverse satisfies the Moore-Penrose conditions") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n(0.0, 1.0);
    MatrixXd M(5, 3);
    for (Eigen::Index i = 0; i < M.size(); ++i) M(i) = n(rng);
    M.col(2) = M.col(0) + 2.0 * M.col(1);  // rank 2
    const MatrixXd P = pseudoinverse(M);
    CHECK((M * P * M - M).norm() <= 1e-10);
    CHECK((P * M * P - P).norm() <= 1e-10);
    CHECK(((M * P).transpose() - M * P).norm() <= 1e-10);
    CHECK(((P * M).transpose() - P * M).norm() <= 1e-10);
    CHECK(numeric_rank(M) == 2);
}

TEST_CASE("least-squares optimality of the fit on noisy data") {
    SnapshotBuffer clean = toy_run(12, 5);
    SnapshotBuffer noisy(2, 1);
    std::mt19937_64 rng(9);
    std::normal_distribution<double> n(0.0, 0.1);
    for (std::size_t k = 0; k < clean.size(); ++k) {
        VectorXd x = clean.states()[k];
        x(0) += n(rng);
        x(1) += n(rng);
        if (k < clean.input_count()) {
            noisy.push(x, clean.inputs()[k]);
        } else {
            noisy.push(x);
        }
    }
    const DataMatrices d = assemble_matrices(noisy);
    const IdentifiedModel m = fit(d);
    const MatrixXd R = d.Xi_P - m.stacked() * d.Omega;
    // Normal equations: residual orthogonal to the regressors.
    CHECK((R * d.Omega.transpose()).norm() <= 1e-8 * d.Xi_P.norm() * d.Omega.norm());
    // Any perturbation of the solution increases the residual.
    MatrixXd bumped = m.stacked();
    bumped(0, 0) += 1e-4;
    CHECK((d.Xi_P - bumped * d.Omega).norm() > R.norm());
    CHECK(m.residual_norm == doctest::Approx(R.norm()).epsilon(1e-9));
}

TEST_CASE("shifted data agree with a one-step prediction") {
    const SnapshotBuffer buf = toy_run(6, 11);
    const IdentifiedModel m = fit(assemble_matrices(buf));
    for (std::size_t k = 0; k + 1 < buf.size(); ++k) {
        const VectorXd pred = predict(m, buf.states()[k], buf.inputs()[k]);
        CHECK((pred - buf.states()[k + 1]).norm() <= 1e-8 * buf.states()[k + 1].norm());
    }
}

TEST_CASE("rank check") {
    MatrixXd full(3, 2);
    full << 1, 0, 0, 1, 1, 1;
    CHECK(has_full_column_rank(full));
    MatrixXd deficient(3, 2);
    deficient << 1, 2, 2, 4, 3, 6;
    CHECK_FALSE(has_full_column_rank(deficient));
    MatrixXd wide(2, 3);
    wide << 1, 0, 0, 0, 1, 0;
    CHECK_FALSE(has_full_column_rank(wide));
}

TEST_CASE("sliding window keeps the latest columns") {
    const SnapshotBuffer buf = toy_run(8, 2);
    const DataMatrices all = assemble_matrices(buf);
    const DataMatrices last = assemble_matrices(buf, 4);
    CHECK(last.Xi.cols() == 3);
    CHECK((last.Xi_P - all.Xi_P.rightCols(3)).norm() == 0.0);
    SnapshotBuffer trimmed = buf;
    trimmed.keep_last(4);
    CHECK(trimmed.size() == 4);
    CHECK((assemble_matrices(trimmed).Omega - last.Omega).norm() == 0.0);
}

}
