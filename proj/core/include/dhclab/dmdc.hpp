#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

namespace dhclab {

using Eigen::MatrixXd;
using Eigen::VectorXd;

inline constexpr double kDefaultRankTol = 1e-10;

// Ordered log of (state, input) pairs. inputs[k] drives states[k] -> states[k+1].
class SnapshotBuffer {
public:
    SnapshotBuffer(int n, int m);

    void push(const VectorXd& state);
    void push(const VectorXd& state, const VectorXd& input);
    // Attach an input to the latest state that has none yet.
    void push_input(const VectorXd& input);

    // Keep only the most recent `count` states (and their inputs).
    void keep_last(std::size_t count);

    int n() const { return n_; }
    int m() const { return m_; }
    std::size_t size() const { return states_.size(); }
    std::size_t input_count() const { return inputs_.size(); }
    const std::vector<VectorXd>& states() const { return states_; }
    const std::vector<VectorXd>& inputs() const { return inputs_; }

private:
    int n_;
    int m_;
    std::vector<VectorXd> states_;
    std::vector<VectorXd> inputs_;
};

struct DataMatrices {
    MatrixXd Xi;
    MatrixXd Xi_P;
    MatrixXd U;
    MatrixXd Omega;
};

struct IdentifiedModel {
    MatrixXd A_hat;
    MatrixXd B_hat;
    double residual_norm = 0.0;
    double condition_number = 1.0;
    int numeric_rank = 0;

    // [A_hat B_hat]
    MatrixXd stacked() const;
};

// Uses the last `window` states when window > 0, otherwise all of them.
DataMatrices assemble_matrices(const SnapshotBuffer& buffer, std::size_t window = 0);

MatrixXd pseudoinverse(const MatrixXd& M, double rel_tol = kDefaultRankTol);

// Count of singular values above rel_tol * sigma_max.
int numeric_rank(const MatrixXd& M, double rel_tol = kDefaultRankTol);

bool has_full_column_rank(const MatrixXd& Omega_T, double rel_tol = kDefaultRankTol);

IdentifiedModel fit(const DataMatrices& data, double rel_tol = kDefaultRankTol);

VectorXd predict(const IdentifiedModel& model, const VectorXd& xi, const VectorXd& u);

}  // namespace dhclab
