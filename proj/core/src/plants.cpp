#include "dhclab/plants.hpp"

#include <cmath>
#include <stdexcept>

#include <unsupported/Eigen/MatrixFunctions>

namespace dhclab {

LinearPlant toy_plant() {
    LinearPlant p;
    p.Ad.resize(2, 2);
    p.Ad << 1.0, 2.0, 3.0, 4.0;
    p.Bd.resize(2, 1);
    p.Bd << 1.0, 0.7;
    p.dt = 1.0;
    return p;
}

ContinuousLinearModel quadrotor_continuous(double m, double Ixx, double g) {
    if (!(m > 0.0) || !(Ixx > 0.0)) {
        throw std::invalid_argument("quadrotor_continuous: mass and inertia must be positive");
    }
    ContinuousLinearModel model;
    model.Ac = MatrixXd::Zero(6, 6);
    model.Ac.block(0, 3, 3, 3).setIdentity();
    model.Ac(kVy, kPhi) = -g;
    model.Bc = MatrixXd::Zero(6, 2);
    model.Bc(kVz, 0) = 1.0 / m;
    model.Bc(kDphi, 1) = 1.0 / Ixx;
    model.state_labels = {"y", "z", "phi", "vy", "vz", "dphi"};
    return model;
}

LinearPlant discretize(const ContinuousLinearModel& model, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("discretize: dt must be positive");
    const Eigen::Index n = model.Ac.rows();
    const Eigen::Index m = model.Bc.cols();
    if (model.Ac.cols() != n || model.Bc.rows() != n) {
        throw std::invalid_argument("discretize: inconsistent model shapes");
    }
    MatrixXd aug = MatrixXd::Zero(n + m, n + m);
    aug.topLeftCorner(n, n) = model.Ac * dt;
    aug.topRightCorner(n, m) = model.Bc * dt;
    const MatrixXd E = aug.exp();
    LinearPlant p;
    p.Ad = E.topLeftCorner(n, n);
    p.Bd = E.topRightCorner(n, m);
    p.dt = dt;
    return p;
}

VectorXd step(const LinearPlant& plant, const VectorXd& x, const VectorXd& u) {
    if (x.size() != plant.Ad.cols() || u.size() != plant.Bd.cols()) {
        throw std::invalid_argument("step: dimension mismatch");
    }
    return plant.Ad * x + plant.Bd * u;
}

bool diverged(const VectorXd& x, double limit) {
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        if (!std::isfinite(x(i)) || std::abs(x(i)) > limit) return true;
    }
    return false;
}

QuadParams sample_perturbation(const PerturbationCase& c, std::mt19937_64& rng) {
    if (c.sigma_m_fraction < 0.0 || c.sigma_Ixx_fraction < 0.0) {
        throw std::invalid_argument("sample_perturbation: fractions must be nonnegative");
    }
    const QuadParams nom = kNominalQuad;
    if (c.sigma_m_fraction == 0.0 && c.sigma_Ixx_fraction == 0.0) return nom;
    std::normal_distribution<double> dm(nom.m, c.sigma_m_fraction * nom.m);
    std::normal_distribution<double> dI(nom.Ixx, c.sigma_Ixx_fraction * nom.Ixx);
    for (;;) {
        const double m = c.sigma_m_fraction == 0.0 ? nom.m : dm(rng);
        const double I = c.sigma_Ixx_fraction == 0.0 ? nom.Ixx : dI(rng);
        if (m > 0.0 && I > 0.0) return {m, I};
    }
}

LinearPlant quadrotor_plant(const QuadParams& true_params, double dt, const QuadParams& nominal) {
    LinearPlant p = discretize(quadrotor_continuous(true_params.m, true_params.Ixx), dt);
    p.true_params = true_params;
    p.nominal_params = nominal;
    return p;
}

VectorXd hover_actuation(const VectorXd& u_cmd, double m_believed, double m_true, double g) {
    VectorXd u = u_cmd;
    u(0) += (m_believed - m_true) * g;
    return u;
}

}  // namespace dhclab
