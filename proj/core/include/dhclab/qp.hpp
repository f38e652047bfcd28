#pragma once

#include <vector>

#include <Eigen/Dense>

namespace dhclab {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct QpOptions {
    double kkt_tol = 1e-8;
    int max_iterations = 200;
};

struct QpResult {
    VectorXd x;
    VectorXd lambda;  // one multiplier per inequality row, zero when inactive
    std::vector<int> active_set;
    bool feasible = false;
    int iterations = 0;
    double kkt_residual = 0.0;
};

// min 0.5 x'Hx + f'x  subject to  A x <= b, H symmetric positive definite.
// Dual active-set method of Goldfarb and Idnani; no feasible start is needed.
QpResult solve_qp(const MatrixXd& H, const VectorXd& f, const MatrixXd& A, const VectorXd& b,
                  const QpOptions& options = {});

double kkt_residual(const MatrixXd& H, const VectorXd& f, const MatrixXd& A, const VectorXd& b,
                    const VectorXd& x, const VectorXd& lambda);

}  // namespace dhclab
