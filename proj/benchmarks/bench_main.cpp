#include <benchmark/benchmark.h>

#include <random>

#include "dhclab/controllers.hpp"
#include "dhclab/dmdc.hpp"
#include "dhclab/harness.hpp"
#include "dhclab/plants.hpp"
#include "dhclab/qp.hpp"

using namespace dhclab;

namespace {

SnapshotBuffer toy_snapshots(int count) {
    const LinearPlant toy = toy_plant();
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    SnapshotBuffer buf(2, 1);
    VectorXd x = VectorXd::Constant(2, 0.01);
    for (int k = 0; k + 1 < count; ++k) {
        VectorXd uk = VectorXd::Constant(1, u(rng));
        buf.push(x, uk);
        x = step(toy, x, uk);
    }
    buf.push(x);
    return buf;
}

void BM_Fit(benchmark::State& state) {
    const DataMatrices d = assemble_matrices(toy_snapshots(static_cast<int>(state.range(0))));
    for (auto _ : state) benchmark::DoNotOptimize(fit(d));
}
BENCHMARK(BM_Fit)->Arg(4)->Arg(16)->Arg(64);

void BM_QpBox(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    std::mt19937_64 rng(2);
    std::normal_distribution<double> g(0.0, 1.0);
    MatrixXd L(n, n);
    for (Eigen::Index i = 0; i < L.size(); ++i) L(i) = g(rng);
    const MatrixXd H = L * L.transpose() + MatrixXd::Identity(n, n);
    VectorXd f(n);
    for (int i = 0; i < n; ++i) f(i) = 5.0 * g(rng);
    MatrixXd A(2 * n, n);
    A << MatrixXd::Identity(n, n), -MatrixXd::Identity(n, n);
    const VectorXd b = VectorXd::Ones(2 * n);
    for (auto _ : state) benchmark::DoNotOptimize(solve_qp(H, f, A, b));
}
BENCHMARK(BM_QpBox)->Arg(4)->Arg(20);

void BM_MpcSolve(benchmark::State& state) {
    const MpcController mpc(quadrotor_plant(kNominalQuad, 0.1), default_mpc_config());
    VectorXd x = VectorXd::Zero(6);
    VectorXd ref = VectorXd::Zero(6);
    ref(kY) = 3;
    ref(kZ) = 5;
    for (auto _ : state) benchmark::DoNotOptimize(mpc.solve_constant(x, ref));
}
BENCHMARK(BM_MpcSolve);

void BM_MpcBuild(benchmark::State& state) {
    MpcController mpc(quadrotor_plant(kNominalQuad, 0.1), default_mpc_config());
    const LinearPlant other = quadrotor_plant({0.031, 1.5e-5}, 0.1);
    for (auto _ : state) mpc.set_model(other);
}
BENCHMARK(BM_MpcBuild);

void BM_DhcStep(benchmark::State& state) {
    DhcConfig cfg;
    cfg.window = 4;
    cfg.max_spectral_radius = 1.0;
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g(0.0, 1.0);
    DhcState dhc(1, 1, cfg);
    VectorXd x = VectorXd::Zero(1);
    for (auto _ : state) x = dhc.step(VectorXd::Constant(1, g(rng)), x);
}
BENCHMARK(BM_DhcStep);

void BM_Trial(benchmark::State& state) {
    const auto kind = static_cast<ControllerKind>(state.range(0));
    const TrialConfig cfg;
    const QuadParams q = trial_parameters(case_from_name("c2"), 1, 0);
    for (auto _ : state) benchmark::DoNotOptimize(run_trial(cfg, kind, q));
    state.SetLabel(to_string(kind));
}
BENCHMARK(BM_Trial)->DenseRange(0, 3)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
