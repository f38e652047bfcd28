#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace dhclab {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct QuadParams {
    double m = 0.03;       // kg
    double Ixx = 1.43e-5;  // kg m^2
};

inline constexpr double kGravity = 9.8;
inline constexpr QuadParams kNominalQuad{};

// State ordering of the planar quadrotor.
enum QuadState : int { kY = 0, kZ = 1, kPhi = 2, kVy = 3, kVz = 4, kDphi = 5 };

struct ContinuousLinearModel {
    MatrixXd Ac;
    MatrixXd Bc;
    std::vector<std::string> state_labels;
};

struct LinearPlant {
    MatrixXd Ad;
    MatrixXd Bd;
    double dt = 1.0;
    QuadParams true_params;
    QuadParams nominal_params;

    int n() const { return static_cast<int>(Ad.rows()); }
    int m() const { return static_cast<int>(Bd.cols()); }
};

struct PerturbationCase {
    double sigma_m_fraction = 0.0;
    double sigma_Ixx_fraction = 0.0;
    std::uint64_t seed = 0;

    static PerturbationCase c1(std::uint64_t seed = 0) { return {0.2, 0.2, seed}; }
    static PerturbationCase c2(std::uint64_t seed = 0) { return {0.6, 0.6, seed}; }
};

LinearPlant toy_plant();

ContinuousLinearModel quadrotor_continuous(double m, double Ixx, double g = kGravity);

// Zero-order hold via the exponential of [[Ac, Bc], [0, 0]] * dt.
LinearPlant discretize(const ContinuousLinearModel& model, double dt);

VectorXd step(const LinearPlant& plant, const VectorXd& x, const VectorXd& u);

bool diverged(const VectorXd& x, double limit = 1e6);

QuadParams sample_perturbation(const PerturbationCase& c, std::mt19937_64& rng);

// Discretized quadrotor with true parameters, tagged with the nominal ones.
LinearPlant quadrotor_plant(const QuadParams& true_params, double dt,
                            const QuadParams& nominal = kNominalQuad);

// The model input is u = [u1 - m g, u2]. A controller that believes the mass is
// m_believed commands thrust u_cmd1 + m_believed g, so the true plant sees an offset.
VectorXd hover_actuation(const VectorXd& u_cmd, double m_believed, double m_true,
                         double g = kGravity);

}  // namespace dhclab
