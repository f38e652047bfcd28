#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dhclab/bounds.hpp"
#include "dhclab/controllers.hpp"
#include "dhclab/plants.hpp"

namespace dhclab {

using Eigen::Vector2d;

enum class ControllerKind { Sfc, Mpc, Mrac, Dhc };

std::string to_string(ControllerKind kind);
ControllerKind controller_from_string(const std::string& name);
const std::vector<ControllerKind>& all_controllers();

enum class ReferenceKind { Step, Ramp, MinimumJerk };

struct ReferenceProfile {
    ReferenceKind kind = ReferenceKind::Ramp;
    double ramp_time = 10.0;  // s
    Vector2d start{0.0, 0.0};
    Vector2d target{3.0, 5.0};

    Vector2d at(double t) const;
};

struct TrialConfig {
    double dt = 0.01;
    double duration = 25.0;
    ReferenceProfile reference;

    // MPC prediction model runs at its own step; the controller is re-solved every dt.
    double mpc_dt = 0.1;
    int prediction_horizon = 10;
    int control_horizon = 2;
    VectorXd q_diag = (VectorXd(6) << 10, 10, 1, 1, 1, 1).finished();
    Vector2d r_weights{0.1, 0.1};
    bool r_on_acceleration = true;

    std::vector<double> sfc_poles = default_sfc_poles();
    MracGains mrac;

    double dhc_period = 1.5;  // outer-loop step, s
    bool dhc_per_axis = true;
    bool dhc_wrap = true;     // false: references pass straight through at the outer rate
    DhcConfig dhc{DhcPairing::ResultingState, DhcInitPolicy::ExtendUntilRank, kDefaultRankTol, 4, 1.0};

    double band_fraction = 0.02;
    double steady_fraction = 0.1;
    double divergence_limit = 1e6;

    MpcConfig mpc_config(const QuadParams& believed) const;
    void validate() const;
};

struct Trajectory {
    double dt = 0.01;
    std::vector<double> t;        // N + 1 samples
    std::vector<VectorXd> x;      // N + 1 states
    std::vector<VectorXd> u;      // N commanded inputs
    std::vector<Vector2d> r;      // N raw references
    std::vector<Vector2d> r_hat;  // N references handed to the low-level loop
    QuadParams true_params;
    bool diverged = false;
    int mpc_fallbacks = 0;
    double max_predicted_phi = 0.0;  // over feasible MPC solves
    double max_kkt_residual = 0.0;
    int dhc_active_from = -1;        // first step with an identified model
};

Trajectory run_trial(const TrialConfig& config, ControllerKind kind, const QuadParams& true_params);

// Parameters of trial `index` of a campaign; identical for every controller.
QuadParams trial_parameters(const PerturbationCase& c, std::uint64_t seed, std::uint64_t index);

struct TrialMetrics {
    std::optional<double> settling_time_s;
    double control_effort = 0.0;
    Vector2d steady_state_error{0.0, 0.0};
    double overshoot = 0.0;
    bool overshoot_relative_to_target = false;
    bool stable = false;
    Vector2d x_steady{0.0, 0.0};
};

TrialMetrics compute_metrics(const std::vector<Vector2d>& positions, const std::vector<VectorXd>& inputs,
                             double dt, const Vector2d& target, double band_fraction = 0.02,
                             double steady_fraction = 0.1, bool diverged = false);

TrialMetrics compute_metrics(const Trajectory& trajectory, const Vector2d& target,
                             double band_fraction = 0.02, double steady_fraction = 0.1);

struct ComparisonRow {
    std::string case_name;
    ControllerKind controller;
    double settling_time = 0.0;  // means over stable trials, NaN when none
    double effort = 0.0;
    double err_y = 0.0;
    double err_z = 0.0;
    double overshoot = 0.0;
    int unstable_count = 0;
    int trials = 0;
};

struct TrialRecord {
    QuadParams params;
    TrialMetrics metrics;
    double max_predicted_phi = 0.0;
    double max_kkt_residual = 0.0;
    int mpc_fallbacks = 0;
};

struct ComparisonResult {
    std::vector<ComparisonRow> rows;
    // trials[controller][trial]
    std::vector<std::vector<TrialRecord>> trials;
};

ComparisonResult controller_comparison(const std::string& case_name, const PerturbationCase& c,
                                       int trials, std::uint64_t seed, const TrialConfig& config,
                                       int jobs = 1,
                                       const std::vector<ControllerKind>& controllers = all_controllers());

PerturbationCase case_from_name(const std::string& name);

struct BoundsCampaignConfig {
    std::vector<double> sigmas;  // default 0.05, 0.10, ..., 1.0
    int trials = 10000;
    std::uint64_t seed = 1;
    int snapshots = 4;
    Vector2d x0{0.01, 0.01};
    double input_amplitude = 1.0;
    NormKind norm = NormKind::Frobenius;
    AngleSource angle = AngleSource::Perturbed;
    double rel_tol = kDefaultRankTol;

    BoundsCampaignConfig();
};

struct BoundsCampaignRow {
    double sigma = 0.0;
    double mean_empirical = 0.0;
    double mean_tight = 0.0;
    double mean_loose = 0.0;
    int trials = 0;
    int discarded = 0;
};

std::vector<BoundsCampaignRow> bounds_campaign(const BoundsCampaignConfig& config, int jobs = 1);

// Runs body(i) for i in [0, count) on up to `jobs` threads.
void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& body);

// 12 significant digits.
std::string format_number(double v);

std::string bounds_csv(const std::vector<BoundsCampaignRow>& rows);
std::string metrics_csv(const std::vector<ComparisonRow>& rows);
std::string trajectory_csv(const Trajectory& trajectory);

}  // namespace dhclab
