#include "dhclab/controllers.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>

namespace dhclab {

// ---- state feedback -------------------------------------------------------

std::vector<double> mixed_sign_sfc_poles() { return {0.9, 0.8, -0.9, -0.8, 0.95, -0.95}; }

std::vector<double> default_sfc_poles() { return {0.9, 0.8, 0.9, 0.8, 0.95, 0.95}; }

namespace {

// Ascending coefficients c0..c_{k-1} of the monic polynomial with the given roots.
VectorXd monic_coefficients(const std::vector<double>& roots) {
    std::vector<double> c{1.0};  // ascending powers
    for (double r : roots) {
        std::vector<double> next(c.size() + 1, 0.0);
        for (std::size_t i = 0; i < c.size(); ++i) {
            next[i + 1] += c[i];
            next[i] -= r * c[i];
        }
        c = std::move(next);
    }
    VectorXd out(static_cast<Eigen::Index>(roots.size()));
    for (std::size_t i = 0; i < roots.size(); ++i) out(static_cast<Eigen::Index>(i)) = c[i];
    return out;
}

}  // namespace

SfcGain place_poles(const LinearPlant& plant, const std::vector<double>& poles) {
    const MatrixXd& A = plant.Ad;
    const MatrixXd& B = plant.Bd;
    const int n = static_cast<int>(A.rows());
    const int m = static_cast<int>(B.cols());
    if (A.cols() != n || B.rows() != n) throw std::invalid_argument("place_poles: inconsistent shapes");
    if (static_cast<int>(poles.size()) != n) {
        throw std::invalid_argument("place_poles: need exactly n poles");
    }

    // Controllability indices, scanning b_1, b_2, ..., A b_1, A b_2, ...
    std::vector<int> mu(static_cast<std::size_t>(m), 0);
    std::vector<bool> alive(static_cast<std::size_t>(m), true);
    MatrixXd basis(n, 0);
    MatrixXd Ak = MatrixXd::Identity(n, n);
    for (int k = 0; k < n && basis.cols() < n; ++k) {
        for (int j = 0; j < m; ++j) {
            if (!alive[static_cast<std::size_t>(j)]) continue;
            MatrixXd trial(n, basis.cols() + 1);
            trial << basis, Ak * B.col(j);
            if (numeric_rank(trial, 1e-10) > basis.cols()) {
                basis = trial;
                ++mu[static_cast<std::size_t>(j)];
            } else {
                alive[static_cast<std::size_t>(j)] = false;
            }
        }
        Ak = A * Ak;
    }
    if (basis.cols() < n) throw std::invalid_argument("place_poles: (A, B) is not controllable");

    MatrixXd C(n, n);
    int col = 0;
    for (int j = 0; j < m; ++j) {
        MatrixXd v = B.col(j);
        for (int k = 0; k < mu[static_cast<std::size_t>(j)]; ++k) {
            C.col(col++) = v;
            v = A * v;
        }
    }
    const MatrixXd Ci = C.inverse();

    MatrixXd T(n, n);
    std::vector<int> ends;
    std::vector<int> chain_inputs;
    int row = 0;
    int sig = 0;
    for (int j = 0; j < m; ++j) {
        const int mj = mu[static_cast<std::size_t>(j)];
        if (mj == 0) continue;
        sig += mj;
        Eigen::RowVectorXd q = Ci.row(sig - 1);
        for (int k = 0; k < mj; ++k) {
            T.row(row++) = q;
            q = q * A;
        }
        ends.push_back(row - 1);
        chain_inputs.push_back(j);
    }
    const MatrixXd Ti = T.inverse();
    const MatrixXd At = T * A * Ti;
    const MatrixXd Bt = T * B;

    const int chains = static_cast<int>(ends.size());
    MatrixXd D = MatrixXd::Zero(chains, n);
    MatrixXd Bm(chains, chains);
    MatrixXd Aend(chains, n);
    std::size_t p = 0;
    int start = 0;
    for (int c = 0; c < chains; ++c) {
        const int mj = mu[static_cast<std::size_t>(chain_inputs[static_cast<std::size_t>(c)])];
        std::vector<double> chunk(poles.begin() + static_cast<std::ptrdiff_t>(p),
                                  poles.begin() + static_cast<std::ptrdiff_t>(p + mj));
        D.block(c, start, 1, mj) = -monic_coefficients(chunk).transpose();
        p += static_cast<std::size_t>(mj);
        start += mj;
        Aend.row(c) = At.row(ends[static_cast<std::size_t>(c)]);
        for (int c2 = 0; c2 < chains; ++c2) {
            Bm(c, c2) = Bt(ends[static_cast<std::size_t>(c)], chain_inputs[static_cast<std::size_t>(c2)]);
        }
    }
    const MatrixXd Kt = Bm.fullPivLu().solve(Aend - D);
    SfcGain gain;
    gain.Kp = MatrixXd::Zero(m, n);
    const MatrixXd Kc = Kt * T;
    for (int c = 0; c < chains; ++c) gain.Kp.row(chain_inputs[static_cast<std::size_t>(c)]) = Kc.row(c);
    gain.poles = poles;

    // Placement check, relative to the pole magnitude; repeated poles are tolerated
    // at the square-root accuracy their Jordan blocks allow.
    Eigen::EigenSolver<MatrixXd> es(A - B * gain.Kp);
    std::vector<std::complex<double>> eig(es.eigenvalues().data(), es.eigenvalues().data() + n);
    for (double want : poles) {
        auto it = std::min_element(eig.begin(), eig.end(), [&](auto a, auto b) {
            return std::abs(a - want) < std::abs(b - want);
        });
        if (std::abs(*it - want) > 1e-6) {
            throw std::runtime_error("place_poles: closed-loop eigenvalues miss the requested poles");
        }
        eig.erase(it);
    }
    return gain;
}

VectorXd sfc_control(const SfcGain& gain, const VectorXd& x, const VectorXd& x_ref) {
    if (x.size() != gain.Kp.cols() || x_ref.size() != x.size()) {
        throw std::invalid_argument("sfc_control: dimension mismatch");
    }
    return -gain.Kp * (x - x_ref);
}

// ---- linear MPC -----------------------------------------------------------

MpcConfig default_mpc_config() {
    MpcConfig c;
    c.Q = VectorXd::Map(std::vector<double>{10, 10, 1, 1, 1, 1}.data(), 6).asDiagonal();
    c.R = Eigen::Vector2d(0.1, 0.1).asDiagonal();
    return c;
}

MatrixXd acceleration_weighted_R(const VectorXd& weights, const QuadParams& params) {
    if (weights.size() != 2) throw std::invalid_argument("acceleration_weighted_R: need two weights");
    const ContinuousLinearModel c = quadrotor_continuous(params.m, params.Ixx);
    MatrixXd R = MatrixXd::Zero(2, 2);
    for (int i = 0; i < 2; ++i) R(i, i) = weights(i) * c.Bc.col(i).squaredNorm();
    return R;
}

MpcController::MpcController(const LinearPlant& model, MpcConfig config)
    : model_(model), config_(std::move(config)) {
    const int n = model_.n();
    const int m = model_.m();
    if (config_.prediction_horizon < 1 || config_.control_horizon < 1 ||
        config_.control_horizon > config_.prediction_horizon) {
        throw std::invalid_argument("MpcController: need 1 <= control_horizon <= prediction_horizon");
    }
    if (config_.Q.rows() != n || config_.Q.cols() != n || config_.R.rows() != m || config_.R.cols() != m) {
        throw std::invalid_argument("MpcController: Q must be n x n and R m x m");
    }
    if (config_.phi_index >= n) throw std::invalid_argument("MpcController: phi_index out of range");
    build();
}

void MpcController::set_model(const LinearPlant& model) {
    if (model.n() != model_.n() || model.m() != model_.m()) {
        throw std::invalid_argument("MpcController: model dimension changed");
    }
    model_ = model;
    build();
}

void MpcController::build() {
    const int n = model_.n();
    const int m = model_.m();
    const int Np = config_.prediction_horizon;
    const int Nc = config_.control_horizon;

    std::vector<MatrixXd> AiB(static_cast<std::size_t>(Np));
    MatrixXd Ai = MatrixXd::Identity(n, n);
    Phi_.resize(Np * n, n);
    for (int i = 0; i < Np; ++i) {
        AiB[static_cast<std::size_t>(i)] = Ai * model_.Bd;
        Ai = model_.Ad * Ai;
        Phi_.middleRows(i * n, n) = Ai;
    }
    G_ = MatrixXd::Zero(Np * n, Nc * m);
    for (int i = 1; i <= Np; ++i) {
        for (int j = 0; j < i; ++j) {
            const int blk = std::min(j, Nc - 1);
            G_.block((i - 1) * n, blk * m, n, m) += AiB[static_cast<std::size_t>(i - 1 - j)];
        }
    }
    MatrixXd QG(Np * n, Nc * m);
    for (int i = 0; i < Np; ++i) QG.middleRows(i * n, n) = config_.Q * G_.middleRows(i * n, n);
    H_ = G_.transpose() * QG;
    for (int j = 0; j < Np; ++j) {
        const int blk = std::min(j, Nc - 1);
        H_.block(blk * m, blk * m, m, m) += config_.R;
    }
    H_ = 0.5 * (H_ + H_.transpose());

    if (config_.phi_index >= 0) {
        Gphi_.resize(Np, Nc * m);
        Phiphi_.resize(Np, n);
        for (int i = 0; i < Np; ++i) {
            Gphi_.row(i) = G_.row(i * n + config_.phi_index);
            Phiphi_.row(i) = Phi_.row(i * n + config_.phi_index);
        }
    }
}

MpcSolution MpcController::solve(const VectorXd& x, const MatrixXd& ref_sequence) const {
    const int n = model_.n();
    const int m = model_.m();
    const int Np = config_.prediction_horizon;
    if (x.size() != n || ref_sequence.cols() != n || ref_sequence.rows() < 1) {
        throw std::invalid_argument("MpcController::solve: dimension mismatch");
    }
    VectorXd err = Phi_ * x;
    for (int i = 0; i < Np; ++i) {
        const int r = std::min<int>(i, static_cast<int>(ref_sequence.rows()) - 1);
        err.segment(i * n, n) -= ref_sequence.row(r).transpose();
    }
    VectorXd qerr(Np * n);
    for (int i = 0; i < Np; ++i) qerr.segment(i * n, n) = config_.Q * err.segment(i * n, n);
    const VectorXd f = G_.transpose() * qerr;

    MpcSolution sol;
    if (config_.phi_index < 0) {
        sol.plan = -H_.llt().solve(f);
    } else {
        const VectorXd phi_free = Phiphi_ * x;
        MatrixXd A(2 * Np, Gphi_.cols());
        A << Gphi_, -Gphi_;
        VectorXd b(2 * Np);
        b << VectorXd::Constant(Np, config_.phi_max) - phi_free,
            phi_free - VectorXd::Constant(Np, config_.phi_min);
        const QpResult qp = solve_qp(H_, f, A, b, config_.qp);
        sol.qp_iterations = qp.iterations;
        sol.kkt_residual = qp.kkt_residual;
        if (qp.feasible) {
            sol.plan = qp.x;
        } else {
            sol.feasible = false;
            sol.fallback = true;
            sol.plan = -H_.llt().solve(f);
            // Clip the first move so the next predicted pitch respects the bounds.
            const double phi1 = phi_free(0) + Gphi_.row(0).dot(sol.plan);
            const double target = std::clamp(phi1, config_.phi_min, config_.phi_max);
            if (phi1 != target) {
                Eigen::Index j = 0;
                Gphi_.row(0).head(m).cwiseAbs().maxCoeff(&j);
                if (Gphi_(0, j) != 0.0) sol.plan(j) += (target - phi1) / Gphi_(0, j);
            }
        }
        sol.max_abs_phi = (phi_free + Gphi_ * sol.plan).cwiseAbs().maxCoeff();
    }
    sol.u = sol.plan.head(m);
    return sol;
}

MpcSolution MpcController::solve_constant(const VectorXd& x, const VectorXd& ref) const {
    return solve(x, ref.transpose());
}

MpcSolution mpc_control(const LinearPlant& model_nominal, const VectorXd& x,
                        const MatrixXd& ref_sequence, const MpcConfig& config) {
    return MpcController(model_nominal, config).solve(x, ref_sequence);
}

// ---- MRAC -----------------------------------------------------------------

MracState mrac_update(const MracState& state, double y_err, double z_err, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("mrac_update: dt must be positive");
    MracState next = state;
    const MracGains& g = state.gains;
    next.m_est += dt * (g.a1 * y_err + g.b1 * z_err);
    next.Ixx_est += dt * (g.a2 * y_err + g.b2 * z_err);
    next.m_est = std::max(next.m_est, g.floor_fraction * state.nominal.m);
    next.Ixx_est = std::max(next.Ixx_est, g.floor_fraction * state.nominal.Ixx);
    return next;
}

// ---- DHC outer loop -------------------------------------------------------

double spectral_radius(const MatrixXd& A) {
    if (A.size() == 0) return 0.0;
    Eigen::EigenSolver<MatrixXd> es(A, false);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

VectorXd dhc_refine(const IdentifiedModel& model, const VectorXd& r_hat_k, const VectorXd& r_next) {
    if (r_hat_k.size() != model.A_hat.cols() || r_next.size() != model.B_hat.cols()) {
        throw std::invalid_argument("dhc_refine: dimension mismatch");
    }
    return model.A_hat * r_hat_k + model.B_hat * r_next;
}

DhcState::DhcState(int n_r, int n_x, DhcConfig config)
    : n_r_(n_r),
      n_x_(n_x),
      config_(config),
      M_(static_cast<std::size_t>(n_r + n_x + 1)),
      buffer_(n_r, n_x) {
    if (n_r != n_x) throw std::invalid_argument("DhcState: reference and state dimensions must match");
    if (config_.window != 0 && config_.window < 3) {
        throw std::invalid_argument("DhcState: window must be 0 or at least 3");
    }
}

void DhcState::activate(const IdentifiedModel& model) {
    if (model.A_hat.rows() != n_r_ || model.A_hat.cols() != n_r_ || model.B_hat.rows() != n_r_ ||
        model.B_hat.cols() != n_x_) {
        throw std::invalid_argument("DhcState::activate: model dimension mismatch");
    }
    model_ = model;
}

void DhcState::record(const VectorXd& x_k) {
    if (x_k.size() != n_x_) throw std::invalid_argument("DhcState::step: state dimension mismatch");
    if (buffer_.size() == 0) return;
    if (config_.pairing == DhcPairing::PreviousState) {
        buffer_.push_input(x_k);
    } else if (buffer_.size() >= 2) {
        buffer_.push_input(x_k);
    }
}

void DhcState::try_fit() {
    if (buffer_.size() < 2 || buffer_.input_count() + 1 < buffer_.size()) return;
    const bool initializing = !model_.has_value();
    if (initializing && buffer_.size() < M_) return;

    const DataMatrices data = assemble_matrices(buffer_, config_.window);
    const bool full_rank = has_full_column_rank(data.Omega.transpose(), config_.rel_tol);
    if (!full_rank && !(initializing && config_.init_policy == DhcInitPolicy::FitAtM)) {
        if (!initializing) ++rejected_;
        return;
    }
    IdentifiedModel candidate = fit(data, config_.rel_tol);
    if (std::isfinite(config_.max_spectral_radius) &&
        !(spectral_radius(candidate.A_hat) < config_.max_spectral_radius)) {
        ++rejected_;
        return;
    }
    model_ = std::move(candidate);
    ++accepted_;
}

VectorXd DhcState::step(const VectorXd& r_next, const VectorXd& x_k) {
    if (r_next.size() != n_r_) throw std::invalid_argument("DhcState::step: reference dimension mismatch");
    record(x_k);
    try_fit();
    if (config_.window != 0) buffer_.keep_last(config_.window);

    VectorXd r_hat = (model_ && !refined_.empty()) ? dhc_refine(*model_, refined_.back(), r_next) : r_next;
    buffer_.push(r_hat);
    refined_.push_back(r_hat);
    return r_hat;
}

}  // namespace dhclab
