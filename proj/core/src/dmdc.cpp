#include "dhclab/dmdc.hpp"

#include <stdexcept>
#include <string>

namespace dhclab {

namespace {

void check_dim(const VectorXd& v, int expected, const char* what) {
    if (v.size() != expected) {
        throw std::invalid_argument(std::string("SnapshotBuffer: ") + what + " has dimension " +
                                    std::to_string(v.size()) + ", expected " +
                                    std::to_string(expected));
    }
}

}  // namespace

SnapshotBuffer::SnapshotBuffer(int n, int m) : n_(n), m_(m) {
    if (n <= 0 || m <= 0) throw std::invalid_argument("SnapshotBuffer: dimensions must be positive");
}

void SnapshotBuffer::push(const VectorXd& state) {
    check_dim(state, n_, "state");
    states_.push_back(state);
}

void SnapshotBuffer::push(const VectorXd& state, const VectorXd& input) {
    check_dim(state, n_, "state");
    check_dim(input, m_, "input");
    if (inputs_.size() != states_.size()) {
        throw std::invalid_argument("SnapshotBuffer: previous state is still missing its input");
    }
    states_.push_back(state);
    inputs_.push_back(input);
}

void SnapshotBuffer::push_input(const VectorXd& input) {
    check_dim(input, m_, "input");
    if (inputs_.size() >= states_.size()) {
        throw std::invalid_argument("SnapshotBuffer: no state is waiting for an input");
    }
    inputs_.push_back(input);
}

void SnapshotBuffer::keep_last(std::size_t count) {
    if (states_.size() <= count) return;
    const std::size_t drop = states_.size() - count;
    states_.erase(states_.begin(), states_.begin() + static_cast<std::ptrdiff_t>(drop));
    const std::size_t drop_in = std::min(drop, inputs_.size());
    inputs_.erase(inputs_.begin(), inputs_.begin() + static_cast<std::ptrdiff_t>(drop_in));
}

MatrixXd IdentifiedModel::stacked() const {
    MatrixXd AP(A_hat.rows(), A_hat.cols() + B_hat.cols());
    AP << A_hat, B_hat;
    return AP;
}

DataMatrices assemble_matrices(const SnapshotBuffer& buffer, std::size_t window) {
    const auto& xs = buffer.states();
    const auto& us = buffer.inputs();
    if (xs.size() < 2) throw std::invalid_argument("assemble_matrices: need at least two states");
    if (us.size() + 1 < xs.size()) {
        throw std::invalid_argument("assemble_matrices: need an input for every state but the last");
    }
    std::size_t first = 0;
    if (window >= 2 && xs.size() > window) first = xs.size() - window;
    const int cols = static_cast<int>(xs.size() - first) - 1;
    const int n = buffer.n();
    const int m = buffer.m();

    DataMatrices d;
    d.Xi.resize(n, cols);
    d.Xi_P.resize(n, cols);
    d.U.resize(m, cols);
    for (int c = 0; c < cols; ++c) {
        const std::size_t k = first + static_cast<std::size_t>(c);
        d.Xi.col(c) = xs[k];
        d.Xi_P.col(c) = xs[k + 1];
        d.U.col(c) = us[k];
    }
    d.Omega.resize(n + m, cols);
    d.Omega << d.Xi, d.U;
    return d;
}

MatrixXd pseudoinverse(const MatrixXd& M, double rel_tol) {
    if (!(rel_tol > 0.0)) throw std::invalid_argument("pseudoinverse: rel_tol must be positive");
    if (M.size() == 0) return MatrixXd::Zero(M.cols(), M.rows());
    Eigen::JacobiSVD<MatrixXd> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const VectorXd& s = svd.singularValues();
    const double cutoff = rel_tol * (s.size() > 0 ? s(0) : 0.0);
    VectorXd inv = VectorXd::Zero(s.size());
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        if (s(i) > cutoff && s(i) > 0.0) inv(i) = 1.0 / s(i);
    }
    return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

int numeric_rank(const MatrixXd& M, double rel_tol) {
    if (M.size() == 0) return 0;
    Eigen::JacobiSVD<MatrixXd> svd(M);
    const VectorXd& s = svd.singularValues();
    if (s(0) <= 0.0) return 0;
    int r = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        if (s(i) > rel_tol * s(0)) ++r;
    }
    return r;
}

bool has_full_column_rank(const MatrixXd& Omega_T, double rel_tol) {
    if (!(rel_tol > 0.0)) throw std::invalid_argument("has_full_column_rank: rel_tol must be positive");
    if (Omega_T.rows() < Omega_T.cols()) return false;
    return numeric_rank(Omega_T, rel_tol) == Omega_T.cols();
}

IdentifiedModel fit(const DataMatrices& data, double rel_tol) {
    const int n = static_cast<int>(data.Xi.rows());
    const int m = static_cast<int>(data.U.rows());
    if (data.Omega.rows() != n + m || data.Xi_P.cols() != data.Omega.cols()) {
        throw std::invalid_argument("fit: inconsistent data matrices");
    }

    Eigen::JacobiSVD<MatrixXd> svd(data.Omega.transpose(), Eigen::ComputeThinU | Eigen::ComputeThinV);
    const VectorXd& s = svd.singularValues();
    const double smax = s.size() > 0 ? s(0) : 0.0;
    VectorXd inv = VectorXd::Zero(s.size());
    int rank = 0;
    double smin = smax;
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        if (smax > 0.0 && s(i) > rel_tol * smax) {
            inv(i) = 1.0 / s(i);
            smin = s(i);
            ++rank;
        }
    }
    const MatrixXd pinv = svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
    // A_P = Xi_P (Omega^T)^+
    const MatrixXd AP = data.Xi_P * pinv.transpose();

    IdentifiedModel model;
    model.A_hat = AP.leftCols(n);
    model.B_hat = AP.rightCols(m);
    model.residual_norm = (data.Xi_P - AP * data.Omega).norm();
    model.numeric_rank = rank;
    model.condition_number = rank > 0 ? smax / smin : 1.0;
    return model;
}

VectorXd predict(const IdentifiedModel& model, const VectorXd& xi, const VectorXd& u) {
    if (xi.size() != model.A_hat.cols() || u.size() != model.B_hat.cols()) {
        throw std::invalid_argument("predict: dimension mismatch");
    }
    return model.A_hat * xi + model.B_hat * u;
}

}  // namespace dhclab
