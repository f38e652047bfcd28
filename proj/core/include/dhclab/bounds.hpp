#pragma once

#include <Eigen/Dense>

#include "dhclab/dmdc.hpp"

namespace dhclab {

enum class NormKind { Frobenius, Spectral };

// Which problem the residual angle in the loose bound is measured on. With
// noise-free nominal data the nominal residual is zero, so theta = 0 and the
// tan term drops out; the perturbed fit is what an observer actually sees.
enum class AngleSource { Nominal, Perturbed };

double matrix_norm(const MatrixXd& M, NormKind kind = NormKind::Frobenius);

// Least-squares problem H z = s with perturbed data (H + dH) z_hat = s + ds.
struct PerturbedLeastSquares {
    MatrixXd H;
    MatrixXd s;
    MatrixXd deltaH;
    MatrixXd delta_s;
    MatrixXd z;
    MatrixXd z_hat;

    // Solves both problems by pseudoinverse.
    static PerturbedLeastSquares solve(const MatrixXd& H, const MatrixXd& s, const MatrixXd& deltaH,
                                       const MatrixXd& delta_s, double rel_tol = kDefaultRankTol);
};

struct BoundReport {
    double kappa = 1.0;
    double theta = 0.0;
    double loose = 0.0;
    double tight = 0.0;
    double empirical = 0.0;
};

double condition_number(const MatrixXd& H, double rel_tol = kDefaultRankTol);

double residual_angle(const MatrixXd& H, const MatrixXd& z, const MatrixXd& s,
                      NormKind kind = NormKind::Frobenius);

double loose_bound(const PerturbedLeastSquares& p, NormKind kind = NormKind::Frobenius,
                   double rel_tol = kDefaultRankTol, AngleSource angle = AngleSource::Nominal);

// kappa * (|dXi_P| / |Xi_P|) * (1 + |A_P_hat|), with H = Omega^T, s = Xi_P^T, z_hat = A_P_hat^T.
double tight_bound(const PerturbedLeastSquares& p, NormKind kind = NormKind::Frobenius,
                   double rel_tol = kDefaultRankTol);

double empirical_relative_error(const MatrixXd& nominal, const MatrixXd& perturbed,
                                NormKind kind = NormKind::Frobenius);

BoundReport evaluate_bounds(const PerturbedLeastSquares& p, NormKind kind = NormKind::Frobenius,
                            double rel_tol = kDefaultRankTol, AngleSource angle = AngleSource::Nominal);

}  // namespace dhclab
