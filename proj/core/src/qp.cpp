#include "dhclab/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace dhclab {

double kkt_residual(const MatrixXd& H, const VectorXd& f, const MatrixXd& A, const VectorXd& b,
                    const VectorXd& x, const VectorXd& lambda) {
    // Stationarity relative to the gradient scale; H can span many decades.
    const VectorXd Hx = H * x;
    const double scale = 1.0 + std::max(f.lpNorm<Eigen::Infinity>(), Hx.lpNorm<Eigen::Infinity>());
    double res = (Hx + f + A.transpose() * lambda).lpNorm<Eigen::Infinity>() / scale;
    for (Eigen::Index i = 0; i < A.rows(); ++i) {
        const double slack = b(i) - A.row(i).dot(x);
        const double row = 1.0 + std::abs(b(i)) + A.row(i).lpNorm<1>() * x.lpNorm<Eigen::Infinity>();
        res = std::max(res, -slack / row);
        res = std::max(res, -lambda(i));
        res = std::max(res, std::abs(lambda(i) * slack) / (scale * row));
    }
    return res;
}

QpResult solve_qp(const MatrixXd& H, const VectorXd& f, const MatrixXd& A, const VectorXd& b,
                  const QpOptions& options) {
    const Eigen::Index n = H.rows();
    const Eigen::Index p = A.rows();
    if (H.cols() != n || f.size() != n || (p > 0 && A.cols() != n) || b.size() != p) {
        throw std::invalid_argument("solve_qp: inconsistent shapes");
    }
    Eigen::LLT<MatrixXd> llt(H);
    if (llt.info() != Eigen::Success) throw std::invalid_argument("solve_qp: H must be positive definite");
    const MatrixXd Linv =
        llt.matrixL().solve(MatrixXd::Identity(n, n));  // L^-1, so H^-1 = Linv' Linv

    QpResult out;
    out.x = -llt.solve(f);
    std::vector<int> active;
    std::vector<double> u;
    const double inf = std::numeric_limits<double>::infinity();
    const double eps = 1e-14;

    auto slack = [&](int i) { return b(i) - A.row(i).dot(out.x); };
    auto feas_tol = [&](int i) { return 1e-12 * (1.0 + std::abs(b(i)) + A.row(i).lpNorm<1>()); };

    int iter = 0;
    bool infeasible = false;
    while (iter < options.max_iterations) {
        int pidx = -1;
        double worst = 0.0;
        for (int i = 0; i < p; ++i) {
            if (std::find(active.begin(), active.end(), i) != active.end()) continue;
            const double s = slack(i);
            if (s < -feas_tol(i) && s < worst) {
                worst = s;
                pidx = i;
            }
        }
        if (pidx < 0) break;

        double up = 0.0;
        const VectorXd np = -A.row(pidx).transpose();
        for (;;) {
            ++iter;
            if (iter > options.max_iterations) break;
            const Eigen::Index q = static_cast<Eigen::Index>(active.size());
            MatrixXd N(n, q);
            for (Eigen::Index j = 0; j < q; ++j) N.col(j) = -A.row(active[j]).transpose();
            MatrixXd J;
            MatrixXd R;
            if (q > 0) {
                Eigen::HouseholderQR<MatrixXd> qr(Linv * N);
                const MatrixXd Q = qr.householderQ() * MatrixXd::Identity(n, n);
                R = qr.matrixQR().topLeftCorner(q, q).triangularView<Eigen::Upper>();
                J = Linv.transpose() * Q;
            } else {
                J = Linv.transpose();
            }
            const VectorXd d = J.transpose() * np;
            const VectorXd z = J.rightCols(n - q) * d.tail(n - q);
            VectorXd r(q);
            if (q > 0) r = R.triangularView<Eigen::Upper>().solve(d.head(q));

            double t1 = inf;
            int l = -1;
            for (Eigen::Index j = 0; j < q; ++j) {
                if (r(j) > eps) {
                    const double ratio = u[j] / r(j);
                    if (ratio < t1) {
                        t1 = ratio;
                        l = static_cast<int>(j);
                    }
                }
            }
            const double zn = z.dot(np);
            const double t2 = (z.norm() > eps && zn > eps) ? -slack(pidx) / zn : inf;

            if (t1 == inf && t2 == inf) {
                infeasible = true;
                break;
            }
            if (t2 == inf) {
                for (Eigen::Index j = 0; j < q; ++j) u[j] -= t1 * r(j);
                up += t1;
                active.erase(active.begin() + l);
                u.erase(u.begin() + l);
                continue;
            }
            const double t = std::min(t1, t2);
            out.x += t * z;
            for (Eigen::Index j = 0; j < q; ++j) u[j] -= t * r(j);
            up += t;
            if (t2 <= t1) {
                active.push_back(pidx);
                u.push_back(up);
                break;
            }
            active.erase(active.begin() + l);
            u.erase(u.begin() + l);
        }
        if (infeasible || iter > options.max_iterations) break;
    }

    out.lambda = VectorXd::Zero(p);
    for (std::size_t j = 0; j < active.size(); ++j) out.lambda(active[j]) = std::max(u[j], 0.0);
    out.active_set = active;
    out.iterations = iter;
    out.kkt_residual = kkt_residual(H, f, A, b, out.x, out.lambda);
    out.feasible = !infeasible && iter <= options.max_iterations;
    if (out.feasible) {
        for (int i = 0; i < p; ++i) {
            if (slack(i) < -feas_tol(i)) out.feasible = false;
        }
    }
    return out;
}

}  // namespace dhclab
