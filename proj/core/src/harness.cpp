#include "dhclab/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <limits>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace dhclab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::mt19937_64 make_rng(std::initializer_list<std::uint64_t> parts) {
    std::vector<std::uint32_t> words;
    for (std::uint64_t p : parts) {
        words.push_back(static_cast<std::uint32_t>(p & 0xffffffffu));
        words.push_back(static_cast<std::uint32_t>(p >> 32));
    }
    std::seed_seq seq(words.begin(), words.end());
    return std::mt19937_64(seq);
}

}  // namespace

std::string to_string(ControllerKind kind) {
    switch (kind) {
        case ControllerKind::Sfc: return "SFC";
        case ControllerKind::Mpc: return "MPC";
        case ControllerKind::Mrac: return "MRAC";
        case ControllerKind::Dhc: return "DHC";
    }
    return "?";
}

ControllerKind controller_from_string(const std::string& name) {
    std::string s;
    for (char c : name) s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (s == "sfc") return ControllerKind::Sfc;
    if (s == "mpc") return ControllerKind::Mpc;
    if (s == "mrac") return ControllerKind::Mrac;
    if (s == "dhc") return ControllerKind::Dhc;
    throw std::invalid_argument("unknown controller '" + name + "'");
}

const std::vector<ControllerKind>& all_controllers() {
    static const std::vector<ControllerKind> kinds{ControllerKind::Sfc, ControllerKind::Mpc,
                                                   ControllerKind::Mrac, ControllerKind::Dhc};
    return kinds;
}

Vector2d ReferenceProfile::at(double t) const {
    if (kind == ReferenceKind::Step || ramp_time <= 0.0) return target;
    double s = std::clamp(t / ramp_time, 0.0, 1.0);
    if (kind == ReferenceKind::MinimumJerk) s = s * s * s * (10.0 - 15.0 * s + 6.0 * s * s);
    return start + s * (target - start);
}

MpcConfig TrialConfig::mpc_config(const QuadParams& believed) const {
    MpcConfig c = default_mpc_config();
    c.prediction_horizon = prediction_horizon;
    c.control_horizon = control_horizon;
    c.Q = q_diag.asDiagonal();
    c.R = r_on_acceleration ? acceleration_weighted_R(r_weights, believed)
                            : MatrixXd(r_weights.asDiagonal());
    return c;
}

void TrialConfig::validate() const {
    auto fail = [](const std::string& what) { throw std::invalid_argument(what); };
    if (!(dt > 0.0)) fail("dt must be positive");
    if (!(duration >= dt)) fail("duration must be at least one step");
    if (!(mpc_dt > 0.0)) fail("mpc_dt must be positive");
    if (prediction_horizon < 1 || control_horizon < 1 || control_horizon > prediction_horizon) {
        fail("need 1 <= control_horizon <= prediction_horizon");
    }
    if (q_diag.size() != 6 || (q_diag.array() < 0.0).any()) fail("q_diag needs six nonnegative entries");
    if ((r_weights.array() <= 0.0).any()) fail("r_weights must be positive");
    if (sfc_poles.size() != 6) fail("sfc_poles needs six entries");
    if (!(dhc_period >= dt)) fail("dhc_period must be at least dt");
    if (!(band_fraction > 0.0)) fail("band_fraction must be positive");
    if (!(steady_fraction > 0.0 && steady_fraction <= 1.0)) fail("steady_fraction must be in (0, 1]");
}

Trajectory run_trial(const TrialConfig& config, ControllerKind kind, const QuadParams& true_params) {
    config.validate();
    const QuadParams nominal = kNominalQuad;
    const LinearPlant plant = quadrotor_plant(true_params, config.dt, nominal);
    const int N = static_cast<int>(std::lround(config.duration / config.dt));

    Trajectory tr;
    tr.dt = config.dt;
    tr.true_params = true_params;
    tr.t.reserve(static_cast<std::size_t>(N) + 1);
    tr.x.reserve(static_cast<std::size_t>(N) + 1);

    VectorXd x = VectorXd::Zero(6);
    x(kY) = config.reference.start(0);
    x(kZ) = config.reference.start(1);
    tr.t.push_back(0.0);
    tr.x.push_back(x);

    std::optional<MpcController> mpc;
    SfcGain sfc;
    MracState mrac;
    mrac.gains = config.mrac;
    std::vector<DhcState> dhc;

    if (kind == ControllerKind::Sfc) {
        sfc = place_poles(quadrotor_plant(nominal, config.dt), config.sfc_poles);
    } else {
        mpc.emplace(quadrotor_plant(nominal, config.mpc_dt), config.mpc_config(nominal));
    }
    if (kind == ControllerKind::Dhc) {
        if (config.dhc_per_axis) {
            dhc.emplace_back(1, 1, config.dhc);
            dhc.emplace_back(1, 1, config.dhc);
        } else {
            dhc.emplace_back(2, 2, config.dhc);
        }
    }
    const int every = std::max(1, static_cast<int>(std::lround(config.dhc_period / config.dt)));

    Vector2d r_cmd = config.reference.at(0.0);
    VectorXd xref = VectorXd::Zero(6);
    for (int k = 0; k < N; ++k) {
        const double t = k * config.dt;
        const Vector2d r_raw = config.reference.at(t + config.dt);

        if (kind == ControllerKind::Dhc) {
            if (k % every == 0) {
                const Vector2d r_next = config.reference.at(t + config.dhc_period);
                if (!config.dhc_wrap) {
                    r_cmd = r_next;
                } else if (config.dhc_per_axis) {
                    for (int a = 0; a < 2; ++a) {
                        r_cmd(a) = dhc[static_cast<std::size_t>(a)]
                                       .step(VectorXd::Constant(1, r_next(a)), VectorXd::Constant(1, x(a)))(0);
                    }
                } else {
                    r_cmd = dhc[0].step(r_next, x.head(2));
                }
                if (tr.dhc_active_from < 0 && !dhc.empty() &&
                    std::all_of(dhc.begin(), dhc.end(),
                                [](const DhcState& d) { return d.phase() == DhcPhase::Active; })) {
                    tr.dhc_active_from = k;
                }
            }
        } else {
            r_cmd = r_raw;
        }
        xref(kY) = r_cmd(0);
        xref(kZ) = r_cmd(1);

        VectorXd u;
        double m_believed = nominal.m;
        if (kind == ControllerKind::Sfc) {
            u = sfc_control(sfc, x, xref);
        } else {
            if (kind == ControllerKind::Mrac) {
                mrac = mrac_update(mrac, r_raw(0) - x(kY), r_raw(1) - x(kZ), config.dt);
                mpc->set_model(quadrotor_plant({mrac.m_est, mrac.Ixx_est}, config.mpc_dt));
                m_believed = mrac.m_est;
            }
            const MpcSolution sol = mpc->solve_constant(x, xref);
            u = sol.u;
            if (sol.fallback) {
                ++tr.mpc_fallbacks;
            } else {
                tr.max_predicted_phi = std::max(tr.max_predicted_phi, sol.max_abs_phi);
            }
            tr.max_kkt_residual = std::max(tr.max_kkt_residual, sol.kkt_residual);
        }

        x = step(plant, x, hover_actuation(u, m_believed, true_params.m));
        tr.u.push_back(u);
        tr.r.push_back(r_raw);
        tr.r_hat.push_back(r_cmd);
        tr.t.push_back((k + 1) * config.dt);
        tr.x.push_back(x);
        if (diverged(x, config.divergence_limit)) {
            tr.diverged = true;
            break;
        }
    }
    return tr;
}

QuadParams trial_parameters(const PerturbationCase& c, std::uint64_t seed, std::uint64_t index) {
    auto rng = make_rng({seed, c.seed, index});
    return sample_perturbation(c, rng);
}

TrialMetrics compute_metrics(const std::vector<Vector2d>& positions, const std::vector<VectorXd>& inputs,
                             double dt, const Vector2d& target, double band_fraction,
                             double steady_fraction, bool diverged) {
    TrialMetrics m;
    const std::size_t n = positions.size();
    if (diverged || n == 0) return m;
    for (const auto& p : positions) {
        if (!p.allFinite()) return m;
    }

    std::size_t tail = static_cast<std::size_t>(std::ceil(steady_fraction * static_cast<double>(n)));
    tail = std::clamp<std::size_t>(tail, 1, n);
    Vector2d xss = Vector2d::Zero();
    for (std::size_t k = n - tail; k < n; ++k) xss += positions[k];
    xss /= static_cast<double>(tail);
    m.x_steady = xss;
    m.steady_state_error = (target - xss).cwiseAbs();

    const bool near_zero = xss.norm() < 1e-6;
    const double band = band_fraction * (near_zero ? target.norm() : xss.norm());
    for (std::size_t k = n - tail; k < n; ++k) {
        if ((positions[k] - xss).norm() > band) return m;  // never settles
    }

    std::size_t settle = 0;
    for (std::size_t k = n; k-- > 0;) {
        if ((positions[k] - xss).norm() > band) {
            settle = k + 1;
            break;
        }
    }
    m.stable = true;
    m.settling_time_s = static_cast<double>(settle) * dt;
    for (std::size_t k = 0; k < settle && k < inputs.size(); ++k) m.control_effort += inputs[k].cwiseAbs().sum();

    // Largest excursion past x_steady along the approach direction of each axis.
    Vector2d exceed = Vector2d::Zero();
    for (int a = 0; a < 2; ++a) {
        const double dir = xss(a) - positions.front()(a);
        if (dir == 0.0) continue;
        const double sgn = dir > 0.0 ? 1.0 : -1.0;
        for (const auto& p : positions) exceed(a) = std::max(exceed(a), sgn * (p(a) - xss(a)));
    }
    // Excursions inside the settling band count as settled, not as overshoot.
    if (exceed.norm() > band) {
        const double denom = near_zero ? target.norm() : xss.norm();
        m.overshoot_relative_to_target = near_zero;
        m.overshoot = denom > 0.0 ? exceed.norm() / denom : 0.0;
    }
    return m;
}

TrialMetrics compute_metrics(const Trajectory& trajectory, const Vector2d& target, double band_fraction,
                             double steady_fraction) {
    std::vector<Vector2d> pos;
    pos.reserve(trajectory.x.size());
    for (const auto& x : trajectory.x) pos.emplace_back(x(kY), x(kZ));
    return compute_metrics(pos, trajectory.u, trajectory.dt, target, band_fraction, steady_fraction,
                           trajectory.diverged);
}

PerturbationCase case_from_name(const std::string& name) {
    if (name == "c1") return PerturbationCase{0.2, 0.2, 1};
    if (name == "c2") return PerturbationCase{0.6, 0.6, 2};
    if (name == "nominal") return PerturbationCase{0.0, 0.0, 0};
    throw std::invalid_argument("unknown case '" + name + "' (expected c1, c2 or nominal)");
}

ComparisonResult controller_comparison(const std::string& case_name, const PerturbationCase& c,
                                       int trials, std::uint64_t seed, const TrialConfig& config,
                                       int jobs, const std::vector<ControllerKind>& controllers) {
    if (trials < 1) throw std::invalid_argument("controller_comparison: trials must be positive");
    config.validate();
    const std::size_t nc = controllers.size();
    const std::size_t nt = static_cast<std::size_t>(trials);
    ComparisonResult result;
    result.trials.assign(nc, std::vector<TrialRecord>(nt));

    std::vector<QuadParams> params(nt);
    for (std::size_t i = 0; i < nt; ++i) params[i] = trial_parameters(c, seed, i);

    parallel_for(nc * nt, jobs, [&](std::size_t job) {
        const std::size_t ci = job / nt;
        const std::size_t ti = job % nt;
        const Trajectory tr = run_trial(config, controllers[ci], params[ti]);
        TrialRecord& rec = result.trials[ci][ti];
        rec.params = params[ti];
        rec.metrics = compute_metrics(tr, config.reference.target, config.band_fraction, config.steady_fraction);
        rec.max_predicted_phi = tr.max_predicted_phi;
        rec.max_kkt_residual = tr.max_kkt_residual;
        rec.mpc_fallbacks = tr.mpc_fallbacks;
    });

    for (std::size_t ci = 0; ci < nc; ++ci) {
        ComparisonRow row;
        row.case_name = case_name;
        row.controller = controllers[ci];
        row.trials = trials;
        int stable = 0;
        double ts = 0, eff = 0, ey = 0, ez = 0, ov = 0;
        for (const TrialRecord& rec : result.trials[ci]) {
            if (!rec.metrics.stable) {
                ++row.unstable_count;
                continue;
            }
            ++stable;
            ts += *rec.metrics.settling_time_s;
            eff += rec.metrics.control_effort;
            ey += rec.metrics.steady_state_error(0);
            ez += rec.metrics.steady_state_error(1);
            ov += rec.metrics.overshoot;
        }
        if (stable > 0) {
            row.settling_time = ts / stable;
            row.effort = eff / stable;
            row.err_y = ey / stable;
            row.err_z = ez / stable;
            row.overshoot = ov / stable;
        } else {
            row.settling_time = row.effort = row.err_y = row.err_z = row.overshoot = kNaN;
        }
        result.rows.push_back(row);
    }
    return result;
}

BoundsCampaignConfig::BoundsCampaignConfig() {
    for (int i = 1; i <= 20; ++i) sigmas.push_back(0.05 * i);
}

std::vector<BoundsCampaignRow> bounds_campaign(const BoundsCampaignConfig& config, int jobs) {
    if (config.trials < 1) throw std::invalid_argument("bounds_campaign: trials must be positive");
    if (config.snapshots < 4) throw std::invalid_argument("bounds_campaign: need at least 4 snapshots");
    const LinearPlant toy = toy_plant();
    const int n = 2;
    const int M = config.snapshots;

    struct Sample {
        bool ok = false;
        double empirical = 0, tight = 0, loose = 0;
    };
    const std::size_t ns = config.sigmas.size();
    const std::size_t nt = static_cast<std::size_t>(config.trials);
    std::vector<Sample> samples(ns * nt);

    parallel_for(ns * nt, jobs, [&](std::size_t job) {
        const std::size_t si = job / nt;
        const std::size_t ti = job % nt;
        const double sigma = config.sigmas[si];
        auto rng = make_rng({config.seed, si, ti});
        std::uniform_real_distribution<double> unif(-config.input_amplitude, config.input_amplitude);
        std::normal_distribution<double> noise(0.0, 1.0);

        SnapshotBuffer clean(n, 1);
        VectorXd x = config.x0;
        for (int k = 0; k < M; ++k) {
            if (k + 1 < M) {
                VectorXd u = VectorXd::Constant(1, unif(rng));
                clean.push(x, u);
                x = step(toy, x, u);
            } else {
                clean.push(x);
            }
        }
        SnapshotBuffer noisy(n, 1);
        for (int k = 0; k < M; ++k) {
            VectorXd xs = clean.states()[static_cast<std::size_t>(k)];
            for (int i = 0; i < n; ++i) xs(i) += sigma * noise(rng);
            if (k + 1 < M) {
                noisy.push(xs, clean.inputs()[static_cast<std::size_t>(k)]);
            } else {
                noisy.push(xs);
            }
        }
        const DataMatrices d0 = assemble_matrices(clean);
        const DataMatrices d1 = assemble_matrices(noisy);
        Sample& out = samples[job];
        if (!has_full_column_rank(d0.Omega.transpose(), config.rel_tol) ||
            !has_full_column_rank(d1.Omega.transpose(), config.rel_tol)) {
            return;
        }
        const MatrixXd H = d0.Omega.transpose();
        const MatrixXd s = d0.Xi_P.transpose();
        const PerturbedLeastSquares p = PerturbedLeastSquares::solve(
            H, s, d1.Omega.transpose() - H, d1.Xi_P.transpose() - s, config.rel_tol);
        if (sigma == 0.0) {
            out.ok = true;
            return;
        }
        const BoundReport rep = evaluate_bounds(p, config.norm, config.rel_tol, config.angle);
        if (!std::isfinite(rep.loose) || !std::isfinite(rep.tight) || !std::isfinite(rep.empirical)) return;
        out.ok = true;
        out.empirical = rep.empirical;
        out.tight = rep.tight;
        out.loose = rep.loose;
    });

    std::vector<BoundsCampaignRow> rows;
    for (std::size_t si = 0; si < ns; ++si) {
        BoundsCampaignRow row;
        row.sigma = config.sigmas[si];
        for (std::size_t ti = 0; ti < nt; ++ti) {
            const Sample& s = samples[si * nt + ti];
            if (!s.ok) {
                ++row.discarded;
                continue;
            }
            ++row.trials;
            row.mean_empirical += s.empirical;
            row.mean_tight += s.tight;
            row.mean_loose += s.loose;
        }
        if (row.trials > 0) {
            row.mean_empirical /= row.trials;
            row.mean_tight /= row.trials;
            row.mean_loose /= row.trials;
        }
        rows.push_back(row);
    }
    return rows;
}

void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& body) {
    const std::size_t workers = std::min<std::size_t>(count, static_cast<std::size_t>(std::max(1, jobs)));
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::exception_ptr error;
    std::mutex error_mutex;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= count) return;
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (v == 0.0) return "0";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

std::string bounds_csv(const std::vector<BoundsCampaignRow>& rows) {
    std::ostringstream os;
    os << "sigma,mean_empirical,mean_tight,mean_loose,discarded\n";
    for (const auto& r : rows) {
        os << format_number(r.sigma) << ',' << format_number(r.mean_empirical) << ','
           << format_number(r.mean_tight) << ',' << format_number(r.mean_loose) << ',' << r.discarded << '\n';
    }
    return os.str();
}

std::string metrics_csv(const std::vector<ComparisonRow>& rows) {
    std::ostringstream os;
    os << "case,controller,settling_time,effort,err_y,err_z,overshoot,unstable_count\n";
    for (const auto& r : rows) {
        os << r.case_name << ',' << to_string(r.controller) << ',' << format_number(r.settling_time) << ','
           << format_number(r.effort) << ',' << format_number(r.err_y) << ',' << format_number(r.err_z) << ','
           << format_number(r.overshoot) << ',' << r.unstable_count << '\n';
    }
    return os.str();
}

std::string trajectory_csv(const Trajectory& tr) {
    std::ostringstream os;
    os << "t,y,z,phi,vy,vz,dphi,u1,u2,r_y,r_z,rhat_y,rhat_z\n";
    for (std::size_t k = 0; k < tr.u.size(); ++k) {
        os << format_number(tr.t[k]);
        for (Eigen::Index i = 0; i < tr.x[k].size(); ++i) os << ',' << format_number(tr.x[k](i));
        for (Eigen::Index i = 0; i < tr.u[k].size(); ++i) os << ',' << format_number(tr.u[k](i));
        os << ',' << format_number(tr.r[k](0)) << ',' << format_number(tr.r[k](1)) << ','
           << format_number(tr.r_hat[k](0)) << ',' << format_number(tr.r_hat[k](1)) << '\n';
    }
    return os.str();
}

}  // namespace dhclab
