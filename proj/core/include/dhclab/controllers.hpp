#pragma once

#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "dhclab/dmdc.hpp"
#include "dhclab/plants.hpp"
#include "dhclab/qp.hpp"

namespace dhclab {

// ---- state feedback -------------------------------------------------------

struct SfcGain {
    MatrixXd Kp;
    std::vector<double> poles;
};

// Mixed-sign pole set. Three poles sit near -1, which leaves almost no gain margin.
std::vector<double> mixed_sign_sfc_poles();
// Same magnitudes with every pole on the positive real axis; campaign default.
std::vector<double> default_sfc_poles();

// Multi-input placement through the Luenberger controllable canonical form.
// Poles are assigned to input chains in order of their controllability indices.
SfcGain place_poles(const LinearPlant& plant, const std::vector<double>& poles);

VectorXd sfc_control(const SfcGain& gain, const VectorXd& x, const VectorXd& x_ref);

// ---- linear MPC -----------------------------------------------------------

struct MpcConfig {
    int prediction_horizon = 10;
    int control_horizon = 2;
    int phi_index = kPhi;  // constrained state, -1 for none
    double phi_min = -std::numbers::pi / 2;
    double phi_max = std::numbers::pi / 2;
    MatrixXd Q;
    MatrixXd R;
    QpOptions qp;
};

// Q = diag(10, 10, 1, 1, 1, 1), R = diag(0.1, 0.1).
MpcConfig default_mpc_config();

// R_ii = w_i * |Bc(:, i)|^2, i.e. the weight acts on the acceleration input i produces.
MatrixXd acceleration_weighted_R(const VectorXd& weights, const QuadParams& params);

struct MpcSolution {
    VectorXd u;
    VectorXd plan;           // stacked control-horizon moves
    bool feasible = true;    // QP solved with constraints
    bool fallback = false;   // unconstrained solution, first move clipped
    double max_abs_phi = 0;  // over the predicted horizon of the returned plan
    double kkt_residual = 0;
    int qp_iterations = 0;
};

class MpcController {
public:
    MpcController(const LinearPlant& model, MpcConfig config);

    void set_model(const LinearPlant& model);

    // ref_sequence: one row per predicted step; the last row is held if shorter.
    MpcSolution solve(const VectorXd& x, const MatrixXd& ref_sequence) const;
    MpcSolution solve_constant(const VectorXd& x, const VectorXd& ref) const;

    const MpcConfig& config() const { return config_; }
    const MatrixXd& hessian() const { return H_; }

private:
    void build();

    LinearPlant model_;
    MpcConfig config_;
    MatrixXd Phi_;  // stacked A^i
    MatrixXd G_;    // stacked input response with move blocking
    VectorXd q_diag_;
    MatrixXd H_;
    MatrixXd Gphi_;
    MatrixXd Phiphi_;
};

MpcSolution mpc_control(const LinearPlant& model_nominal, const VectorXd& x,
                        const MatrixXd& ref_sequence, const MpcConfig& config);

// ---- MRAC -----------------------------------------------------------------

struct MracGains {
    double a1 = 0.1;
    double b1 = 0.1;
    double a2 = 1e-4;
    double b2 = 1e-4;
    double floor_fraction = 0.1;
};

struct MracState {
    double m_est = kNominalQuad.m;
    double Ixx_est = kNominalQuad.Ixx;
    MracGains gains;
    QuadParams nominal = kNominalQuad;
};

// Forward Euler on dm/dt = a1 ey + b1 ez, dIxx/dt = a2 ey + b2 ez.
MracState mrac_update(const MracState& state, double y_err, double z_err, double dt);

// ---- DHC outer loop -------------------------------------------------------

enum class DhcPairing {
    PreviousState,   // (r_k, x_k) -> r_{k+1}, x_k measured before r_{k+1} is issued
    ResultingState,  // (r_k, x_{k+1}) -> r_{k+1}, x_{k+1} produced by r_{k+1}
};

enum class DhcInitPolicy {
    ExtendUntilRank,  // stay in pass-through until the data have full rank
    FitAtM,           // fit unconditionally after M steps
};

enum class DhcPhase { Initializing, Active };

struct DhcConfig {
    DhcPairing pairing = DhcPairing::ResultingState;
    DhcInitPolicy init_policy = DhcInitPolicy::ExtendUntilRank;
    double rel_tol = kDefaultRankTol;
    std::size_t window = 0;  // states kept for the fit, 0 = all
    // Fits whose A_hat has spectral radius at or above this are rejected like
    // rank-deficient ones. Infinity disables the check.
    double max_spectral_radius = std::numeric_limits<double>::infinity();
};

VectorXd dhc_refine(const IdentifiedModel& model, const VectorXd& r_hat_k, const VectorXd& r_next);

class DhcState {
public:
    DhcState(int n_r, int n_x, DhcConfig config = {});

    // One outer step: x_k is the output measured after the last issued reference.
    VectorXd step(const VectorXd& r_next, const VectorXd& x_k);

    // Start directly in the active phase with a given model.
    void activate(const IdentifiedModel& model);

    DhcPhase phase() const { return model_ ? DhcPhase::Active : DhcPhase::Initializing; }
    const std::optional<IdentifiedModel>& model() const { return model_; }
    std::size_t M() const { return M_; }
    std::size_t step_count() const { return refined_.size(); }
    const std::vector<VectorXd>& refined_refs() const { return refined_; }
    const SnapshotBuffer& buffer() const { return buffer_; }
    const DhcConfig& config() const { return config_; }
    int accepted_fits() const { return accepted_; }
    int rejected_fits() const { return rejected_; }

private:
    void record(const VectorXd& x_k);
    void try_fit();

    int n_r_;
    int n_x_;
    DhcConfig config_;
    std::size_t M_;
    SnapshotBuffer buffer_;
    std::vector<VectorXd> refined_;
    std::optional<IdentifiedModel> model_;
    int accepted_ = 0;
    int rejected_ = 0;
};

inline VectorXd dhc_step(DhcState& dhc, const VectorXd& r_next, const VectorXd& x_k) {
    return dhc.step(r_next, x_k);
}

double spectral_radius(const MatrixXd& A);

}  // namespace dhclab
