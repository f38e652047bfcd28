// dhclab: batch front-end for the DMDc / DHC experiments.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "dhclab/dmdc.hpp"
#include "dhclab/harness.hpp"
#include "dhclab/plants.hpp"

namespace fs = std::filesystem;
using namespace dhclab;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitNumeric = 2;

struct NumericFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

int default_jobs() {
    const unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
}

void write_file(const fs::path& dir, const std::string& name, const std::string& body) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw std::invalid_argument("cannot create output directory '" + dir.string() + "'");
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw std::invalid_argument("cannot write '" + (dir / name).string() + "'");
    out << body;
    std::cout << "wrote " << (dir / name).string() << "\n";
}

// Options shared by compare and trial.
struct SimOptions {
    double dt = 0.01;
    double duration = 25.0;
    std::string reference = "ramp";
    double ramp_time = 10.0;
    std::vector<double> target{3.0, 5.0};
    double mpc_dt = 0.1;
    int prediction_horizon = 10;
    int control_horizon = 2;
    std::vector<double> q_diag{10, 10, 1, 1, 1, 1};
    std::vector<double> r_weights{0.1, 0.1};
    bool r_on_acceleration = true;
    std::vector<double> sfc_poles = default_sfc_poles();
    double dhc_period = 1.5;
    int dhc_window = 4;
    std::string dhc_pairing = "resulting";
    std::string dhc_init = "extend";
    double dhc_max_rho = 1.0;
    bool dhc_per_axis = true;
    double rank_tol = kDefaultRankTol;

    void add(CLI::App* app) {
        app->add_option("--dt", dt, "Simulation step [s]")->capture_default_str()->check(CLI::PositiveNumber);
        app->add_option("--duration", duration, "Trial length [s]")->capture_default_str()->check(CLI::PositiveNumber);
        app->add_option("--reference", reference, "Reference profile: ramp, smooth (minimum jerk) or step")
            ->capture_default_str()
            ->check(CLI::IsMember({"ramp", "smooth", "step"}));
        app->add_option("--ramp-time", ramp_time, "Ramp duration from start to target [s]")->capture_default_str();
        app->add_option("--target", target, "Target position y z [m]")->capture_default_str()->expected(2);
        app->add_option("--mpc-dt", mpc_dt, "MPC prediction model step [s]")
            ->capture_default_str()
            ->check(CLI::PositiveNumber);
        app->add_option("--prediction-horizon", prediction_horizon, "MPC prediction horizon [steps]")
            ->capture_default_str()
            ->check(CLI::PositiveNumber);
        app->add_option("--control-horizon", control_horizon, "MPC control horizon [steps]")
            ->capture_default_str()
            ->check(CLI::PositiveNumber);
        app->add_option("--q-diag", q_diag, "MPC state weights (6 values)")->capture_default_str()->expected(6);
        app->add_option("--r-weights", r_weights, "MPC input weights (2 values)")->capture_default_str()->expected(2);
        app->add_option("--r-on-acceleration", r_on_acceleration,
                        "Apply input weights to the accelerations the inputs produce")
            ->capture_default_str();
        app->add_option("--sfc-poles", sfc_poles, "Closed-loop poles for state feedback (6 values)")
            ->capture_default_str()
            ->expected(6);
        app->add_option("--dhc-period", dhc_period, "DHC outer-loop step [s]")
            ->capture_default_str()
            ->check(CLI::PositiveNumber);
        app->add_option("--dhc-window", dhc_window, "DHC fit window in outer steps, 0 = all data")
            ->capture_default_str()
            ->check(CLI::NonNegativeNumber);
        app->add_option("--dhc-pairing", dhc_pairing, "Output paired with r_k: resulting (x_{k+1}) or previous (x_k)")
            ->capture_default_str()
            ->check(CLI::IsMember({"resulting", "previous"}));
        app->add_option("--dhc-init", dhc_init, "Initialization: extend (until rank) or fixed (fit at M)")
            ->capture_default_str()
            ->check(CLI::IsMember({"extend", "fixed"}));
        app->add_option("--dhc-max-rho", dhc_max_rho, "Reject DHC fits with spectral radius at or above this (0 = off)")
            ->capture_default_str()
            ->check(CLI::NonNegativeNumber);
        app->add_option("--dhc-per-axis", dhc_per_axis, "One scalar DHC per position axis")->capture_default_str();
        app->add_option("--rank-tol", rank_tol, "Relative singular-value tolerance for rank checks")
            ->capture_default_str()
            ->check(CLI::PositiveNumber);
    }

    TrialConfig build() const {
        TrialConfig c;
        c.dt = dt;
        c.duration = duration;
        c.reference.kind = reference == "step"     ? ReferenceKind::Step
                           : reference == "smooth" ? ReferenceKind::MinimumJerk
                                                   : ReferenceKind::Ramp;
        c.reference.ramp_time = ramp_time;
        c.reference.target = Vector2d(target[0], target[1]);
        c.mpc_dt = mpc_dt;
        c.prediction_horizon = prediction_horizon;
        c.control_horizon = control_horizon;
        c.q_diag = VectorXd::Map(q_diag.data(), static_cast<Eigen::Index>(q_diag.size()));
        c.r_weights = Vector2d(r_weights[0], r_weights[1]);
        c.r_on_acceleration = r_on_acceleration;
        c.sfc_poles = sfc_poles;
        c.dhc_period = dhc_period;
        c.dhc_per_axis = dhc_per_axis;
        c.dhc.window = static_cast<std::size_t>(dhc_window);
        c.dhc.pairing = dhc_pairing == "previous" ? DhcPairing::PreviousState : DhcPairing::ResultingState;
        c.dhc.init_policy = dhc_init == "fixed" ? DhcInitPolicy::FitAtM : DhcInitPolicy::ExtendUntilRank;
        c.dhc.max_spectral_radius = dhc_max_rho > 0.0 ? dhc_max_rho : std::numeric_limits<double>::infinity();
        c.dhc.rel_tol = rank_tol;
        c.validate();
        return c;
    }
};

int run_bounds(std::uint64_t seed, int trials, int snapshots, const std::string& angle, int jobs,
               const std::string& out) {
    BoundsCampaignConfig cfg;
    cfg.angle = angle == "nominal" ? AngleSource::Nominal : AngleSource::Perturbed;
    cfg.seed = seed;
    cfg.trials = trials;
    cfg.snapshots = snapshots;
    const auto rows = bounds_campaign(cfg, jobs);
    write_file(out, "bounds.csv", bounds_csv(rows));
    for (const auto& r : rows) {
        if (r.discarded > 0.01 * (r.trials + r.discarded)) {
            throw NumericFailure("more than 1% of trials discarded at sigma = " + format_number(r.sigma));
        }
    }
    return kExitOk;
}

int run_compare(const std::vector<std::string>& cases, int trials, std::uint64_t seed, int jobs,
                const SimOptions& sim, const std::string& out) {
    const TrialConfig cfg = sim.build();
    std::vector<ComparisonRow> rows;
    for (const auto& name : cases) {
        const auto result = controller_comparison(name, case_from_name(name), trials, seed, cfg, jobs);
        rows.insert(rows.end(), result.rows.begin(), result.rows.end());
    }
    const std::string csv = metrics_csv(rows);
    write_file(out, "metrics.csv", csv);
    std::cout << csv;
    return kExitOk;
}

int run_single(const std::string& case_name, const std::string& controller, std::uint64_t seed, int index,
               const SimOptions& sim, const std::string& out) {
    const TrialConfig cfg = sim.build();
    const QuadParams p = trial_parameters(case_from_name(case_name), seed, static_cast<std::uint64_t>(index));
    const Trajectory tr = run_trial(cfg, controller_from_string(controller), p);
    write_file(out, "trajectory.csv", trajectory_csv(tr));
    const TrialMetrics m = compute_metrics(tr, cfg.reference.target, cfg.band_fraction, cfg.steady_fraction);
    std::cout << "m_true=" << format_number(p.m) << " Ixx_true=" << format_number(p.Ixx) << "\n";
    if (!m.stable) {
        std::cout << "unstable\n";
    } else {
        std::cout << "settling_time=" << format_number(*m.settling_time_s)
                  << " effort=" << format_number(m.control_effort)
                  << " err_y=" << format_number(m.steady_state_error(0))
                  << " err_z=" << format_number(m.steady_state_error(1))
                  << " overshoot=" << format_number(m.overshoot) << "\n";
    }
    if (tr.diverged) throw NumericFailure("trajectory diverged");
    return kExitOk;
}

int run_fit_demo(std::uint64_t seed) {
    const LinearPlant toy = toy_plant();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    SnapshotBuffer buf(2, 1);
    VectorXd x = (VectorXd(2) << 0.01, 0.01).finished();
    for (int k = 0; k < 3; ++k) {
        VectorXd u = VectorXd::Constant(1, unif(rng));
        buf.push(x, u);
        x = step(toy, x, u);
    }
    buf.push(x);
    const DataMatrices d = assemble_matrices(buf);
    if (!has_full_column_rank(d.Omega.transpose())) throw NumericFailure("snapshot matrix is rank deficient");
    const IdentifiedModel model = fit(d);
    const Eigen::IOFormat fmt(12, 0, ", ", "\n", "  [", "]");
    std::cout << "A_hat =\n" << model.A_hat.format(fmt) << "\n";
    std::cout << "B_hat =\n" << model.B_hat.format(fmt) << "\n";
    const double err = std::max((model.A_hat - toy.Ad).cwiseAbs().maxCoeff(),
                                (model.B_hat - toy.Bd).cwiseAbs().maxCoeff());
    std::cout << "max abs error = " << format_number(err) << "\n";
    std::cout << "condition number = " << format_number(model.condition_number) << "\n";
    if (!(err <= 1e-8)) throw NumericFailure("recovery error above 1e-8");
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"DMDc identification and data-driven hierarchical control experiments"};
    app.require_subcommand(1);
    app.set_config("--config", "", "TOML configuration file; command-line flags take precedence");
    app.allow_config_extras(false);

    std::uint64_t seed = 1;
    int jobs = default_jobs();
    std::string out = ".";

    auto add_common = [&](CLI::App* sub, bool with_jobs) {
        sub->add_option("--seed", seed, "Campaign seed")->capture_default_str();
        sub->add_option("--out", out, "Output directory")->capture_default_str();
        if (with_jobs) {
            sub->add_option("--jobs", jobs, "Worker threads (default: core count)")
                ->capture_default_str()
                ->check(CLI::PositiveNumber);
        }
    };

    auto* bounds = app.add_subcommand("bounds", "Monte Carlo check of the perturbation bounds on the toy system");
    int bounds_trials = 10000;
    int snapshots = 4;
    add_common(bounds, true);
    bounds->add_option("--trials", bounds_trials, "Trials per noise level")->capture_default_str()->check(CLI::PositiveNumber);
    bounds->add_option("--snapshots", snapshots, "Snapshots per fit (>= 4)")->capture_default_str()->check(CLI::Range(4, 1000));
    std::string angle = "perturbed";
    bounds->add_option("--angle", angle, "Residual angle of the loose bound taken from the nominal or perturbed fit")
        ->capture_default_str()
        ->check(CLI::IsMember({"nominal", "perturbed"}));

    auto* compare = app.add_subcommand("compare", "Compare SFC, MPC, MRAC and DHC on the planar quadrotor");
    int compare_trials = 10;
    std::vector<std::string> cases{"c1", "c2"};
    SimOptions compare_sim;
    add_common(compare, true);
    compare->add_option("--trials", compare_trials, "Trials per case")->capture_default_str()->check(CLI::PositiveNumber);
    compare->add_option("--case", cases, "Perturbation cases (c1, c2, nominal)")
        ->capture_default_str()
        ->check(CLI::IsMember({"c1", "c2", "nominal"}));
    compare_sim.add(compare);

    auto* trial = app.add_subcommand("trial", "Run one seeded trial and write its trajectory");
    std::string trial_case = "c1";
    std::string controller = "dhc";
    int index = 0;
    SimOptions trial_sim;
    add_common(trial, false);
    trial->add_option("--case", trial_case, "Perturbation case")
        ->capture_default_str()
        ->check(CLI::IsMember({"c1", "c2", "nominal"}));
    trial->add_option("--controller", controller, "sfc, mpc, mrac or dhc")
        ->capture_default_str()
        ->check(CLI::IsMember({"sfc", "mpc", "mrac", "dhc"}, CLI::ignore_case));
    trial->add_option("--index", index, "Trial index within the case")->capture_default_str()->check(CLI::NonNegativeNumber);
    trial_sim.add(trial);

    auto* demo = app.add_subcommand("fit-demo", "Recover the toy system from four noise-free snapshots");
    demo->add_option("--seed", seed, "Input sequence seed")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (*bounds) return run_bounds(seed, bounds_trials, snapshots, angle, jobs, out);
        if (*compare) return run_compare(cases, compare_trials, seed, jobs, compare_sim, out);
        if (*trial) return run_single(trial_case, controller, seed, index, trial_sim, out);
        if (*demo) return run_fit_demo(seed);
    } catch (const NumericFailure& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const std::invalid_argument& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return kExitNumeric;
    }
    return kExitOk;
}
