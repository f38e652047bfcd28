#include "dhclab/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace dhclab {

double matrix_norm(const MatrixXd& M, NormKind kind) {
    if (M.size() == 0) return 0.0;
    if (kind == NormKind::Frobenius) return M.norm();
    Eigen::JacobiSVD<MatrixXd> svd(M);
    return svd.singularValues()(0);
}

PerturbedLeastSquares PerturbedLeastSquares::solve(const MatrixXd& H, const MatrixXd& s,
                                                   const MatrixXd& deltaH, const MatrixXd& delta_s,
                                                   double rel_tol) {
    if (H.rows() != s.rows() || deltaH.rows() != H.rows() || deltaH.cols() != H.cols() ||
        delta_s.rows() != s.rows() || delta_s.cols() != s.cols()) {
        throw std::invalid_argument("PerturbedLeastSquares: inconsistent shapes");
    }
    PerturbedLeastSquares p;
    p.H = H;
    p.s = s;
    p.deltaH = deltaH;
    p.delta_s = delta_s;
    p.z = pseudoinverse(H, rel_tol) * s;
    p.z_hat = pseudoinverse(H + deltaH, rel_tol) * (s + delta_s);
    return p;
}

double condition_number(const MatrixXd& H, double rel_tol) {
    if (H.size() == 0) throw std::invalid_argument("condition_number: empty matrix");
    Eigen::JacobiSVD<MatrixXd> svd(H);
    const VectorXd& sv = svd.singularValues();
    const double smax = sv(0);
    if (smax <= 0.0) throw std::invalid_argument("condition_number: undefined for the zero matrix");
    double smin = smax;
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
        if (sv(i) > rel_tol * smax) smin = sv(i);
    }
    return smax / smin;
}

double residual_angle(const MatrixXd& H, const MatrixXd& z, const MatrixXd& s, NormKind kind) {
    const double ns = matrix_norm(s, kind);
    if (ns == 0.0) throw std::invalid_argument("residual_angle: undefined for s = 0");
    const double c = std::clamp(matrix_norm(H * z, kind) / ns, 0.0, 1.0);
    return std::acos(c);
}

namespace {

double angle_of(const PerturbedLeastSquares& p, NormKind kind, AngleSource angle) {
    if (angle == AngleSource::Nominal) return residual_angle(p.H, p.z, p.s, kind);
    return residual_angle(p.H + p.deltaH, p.z_hat, p.s + p.delta_s, kind);
}

}  // namespace

double loose_bound(const PerturbedLeastSquares& p, NormKind kind, double rel_tol, AngleSource angle) {
    const double nH = matrix_norm(p.H, kind);
    const double ns = matrix_norm(p.s, kind);
    if (nH == 0.0 || ns == 0.0 || matrix_norm(p.z, kind) == 0.0) {
        throw std::invalid_argument("loose_bound: H, s and z must be nonzero");
    }
    const double c = std::cos(angle_of(p, kind, angle));
    // acos/cos round trip leaves ~1e-17 at a right angle.
    if (c <= 1e-12) throw std::domain_error("loose_bound: residual angle is pi/2, bound is infinite");
    const double tan_theta = std::sqrt(std::max(0.0, 1.0 - c * c)) / c;
    const double kappa = condition_number(p.H, rel_tol);
    const double eH = matrix_norm(p.deltaH, kind) / nH;
    const double es = matrix_norm(p.delta_s, kind) / ns;
    return (kappa * kappa * tan_theta + kappa) * eH + kappa / c * es;
}

double tight_bound(const PerturbedLeastSquares& p, NormKind kind, double rel_tol) {
    const double ns = matrix_norm(p.s, kind);
    if (ns == 0.0 || matrix_norm(p.H, kind) == 0.0) {
        throw std::invalid_argument("tight_bound: H and s must be nonzero");
    }
    const double kappa = condition_number(p.H, rel_tol);
    return kappa * (matrix_norm(p.delta_s, kind) / ns) * (1.0 + matrix_norm(p.z_hat, kind));
}

double empirical_relative_error(const MatrixXd& nominal, const MatrixXd& perturbed, NormKind kind) {
    if (nominal.rows() != perturbed.rows() || nominal.cols() != perturbed.cols()) {
        throw std::invalid_argument("empirical_relative_error: shape mismatch");
    }
    const double n = matrix_norm(nominal, kind);
    if (n == 0.0) throw std::invalid_argument("empirical_relative_error: nominal is zero");
    return matrix_norm(perturbed - nominal, kind) / n;
}

BoundReport evaluate_bounds(const PerturbedLeastSquares& p, NormKind kind, double rel_tol, AngleSource angle) {
    BoundReport r;
    r.kappa = condition_number(p.H, rel_tol);
    r.theta = angle_of(p, kind, angle);
    r.loose = loose_bound(p, kind, rel_tol, angle);
    r.tight = tight_bound(p, kind, rel_tol);
    r.empirical = empirical_relative_error(p.z, p.z_hat, kind);
    return r;
}

}  // namespace dhclab
