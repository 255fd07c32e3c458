// Acceptance suite: one PASS/FAIL line per criterion.
//
// Exit status is nonzero when a criterion fails that is not listed in
// kExpectedFailures, or when a check throws. Pass --strict to fail on any FAIL,
// and criterion names to run only those.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <bess/experiment.hpp>
#include <bess/formulations.hpp>
#include <bess/icnn.hpp>
#include <bess/miqp.hpp>
#include <bess/nlp.hpp>
#include <bess/qp.hpp>
#include <bess/timeseries.hpp>

#ifdef BESS_HAVE_CLI
#include "cli.hpp"
#endif

#include "oracles.hpp"
#include "support.hpp"

using namespace bess;
namespace fs = std::filesystem;

namespace {

// Tolerances and budgets.
constexpr double kQpObjTol = 1e-4;
constexpr double kQpKktTol = 1e-5;
constexpr double kQpBudgetS = 10.0;
constexpr double kMiqpObjTol = 1e-6;
constexpr double kMiqpBudgetS = 60.0;
constexpr int kConvexityPairs = 10000;
constexpr double kRmseTol = 1e-2;
constexpr double kTrainBudgetS = 60.0;
constexpr double kGradRelTol = 1e-4;
constexpr double kGradStep = 1e-5;
constexpr double kKinkMargin = 1e-3;
constexpr double kSweepLambdaMin = 1e-3;
constexpr double kSweepGapTol = 1e-3;
constexpr double kSweepMetricRelTol = 0.01;
constexpr double kDominanceTol = 1e-4;
constexpr double kRevenueRelTol = 0.01;
constexpr double kNlpGridStep = 0.01;
constexpr double kNlpObjTol = 1e-2;
constexpr double kRelaxedBudgetS = 30.0;
constexpr double kBigMBudgetS = 600.0;
constexpr double kBigMGapTol = 1e-3;
constexpr std::size_t kBigMSteps = 12;

// Criteria that fail for reasons analysed in the project notes; they still print FAIL.
const std::set<std::string> kExpectedFailures{"relaxation-tightness", "nlp-oracle", "performance-envelope"};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* format, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, format, args...);
    return buf;
}

struct Outcome {
    bool pass{false};
    std::string detail;
};

// ---------------------------------------------------------------------------

Outcome qp_oracle() {
    std::mt19937_64 rng(7001);
    std::uniform_int_distribution<int> n_pick(1, 20);
    double worst_obj = 0.0, worst_kkt = 0.0, solve_s = 0.0;
    int failures = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const int n = n_pick(rng);
        std::uniform_int_distribution<int> extra_pick(0, 30 - n);
        const auto p = oracle::random_qp(rng, n, extra_pick(rng));
        const auto ref = oracle::interior_point(p);
        if (!ref.converged) throw std::runtime_error(fmt("oracle did not converge on trial %d", trial));
        const auto qp = support::to_qp(p);
        const auto t0 = Clock::now();
        const auto sol = opt::solve_qp(qp);
        solve_s += seconds_since(t0);
        if (sol.status != opt::SolveStatus::optimal) {
            ++failures;
            continue;
        }
        const auto r = opt::kkt_residuals(qp, sol);
        worst_obj = std::max(worst_obj, std::abs(sol.objective - ref.objective));
        worst_kkt = std::max({worst_kkt, r.primal, r.dual});
    }
    const bool pass = failures == 0 && worst_obj <= kQpObjTol && worst_kkt <= kQpKktTol && solve_s < kQpBudgetS;
    return {pass, fmt("100 QPs: %d not optimal, max |obj err| %.2e, max KKT %.2e, %.2f s", failures, worst_obj,
                      worst_kkt, solve_s)};
}

// ---------------------------------------------------------------------------

struct RandomMiqp {
    oracle::DenseQp p;  // continuous block first, then the binaries
    int nc{0};
    int nb{0};
};

// Every binary assignment stays feasible: each general row's range covers
// a'x0 + b'y for all y.
RandomMiqp random_miqp(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> U(-1.0, 1.0), pos(0.1, 1.0);
    RandomMiqp out;
    out.nb = std::uniform_int_distribution<int>(1, 12)(rng);
    out.nc = std::uniform_int_distribution<int>(1, 8)(rng);
    const int n = out.nc + out.nb;
    const int rows = std::uniform_int_distribution<int>(0, 8)(rng);
    const int rank = std::uniform_int_distribution<int>(1, n)(rng);

    Eigen::MatrixXd B(n, rank);
    for (Eigen::Index i = 0; i < B.size(); ++i) B.data()[i] = U(rng);
    out.p.Q = B * B.transpose();
    out.p.c.resize(n);
    for (int i = 0; i < n; ++i) out.p.c(i) = 2.0 * U(rng);

    Eigen::VectorXd x0(out.nc);
    for (int i = 0; i < out.nc; ++i) x0(i) = U(rng);
    out.p.A = Eigen::MatrixXd::Zero(n + rows, n);
    out.p.l.resize(n + rows);
    out.p.u.resize(n + rows);
    for (int i = 0; i < n; ++i) {
        out.p.A(i, i) = 1.0;
        const bool binary = i >= out.nc;
        out.p.l(i) = binary ? 0.0 : -2.0 - pos(rng);
        out.p.u(i) = binary ? 1.0 : 2.0 + pos(rng);
    }
    for (int r = n; r < n + rows; ++r) {
        for (int j = 0; j < out.nc; ++j) out.p.A(r, j) = U(rng);
        const double ax = out.p.A.row(r).head(out.nc).dot(x0);
        if (std::uniform_int_distribution<int>(0, 3)(rng) == 0) {
            out.p.l(r) = out.p.u(r) = ax;
            continue;
        }
        double lo = 0.0, hi = 0.0;
        for (int j = out.nc; j < n; ++j) {
            out.p.A(r, j) = U(rng);
            lo += std::min(0.0, out.p.A(r, j));
            hi += std::max(0.0, out.p.A(r, j));
        }
        out.p.l(r) = ax + lo - pos(rng);
        out.p.u(r) = ax + hi + pos(rng);
    }
    return out;
}

// Minimum over all 2^nb assignments of the continuous QP left after fixing y.
double enumerate(const RandomMiqp& m) {
    const int nc = m.nc, nb = m.nb;
    const Eigen::MatrixXd Qcc = m.p.Q.topLeftCorner(nc, nc);
    const Eigen::MatrixXd Qcb = m.p.Q.topRightCorner(nc, nb);
    const Eigen::MatrixXd Qbb = m.p.Q.bottomRightCorner(nb, nb);
    std::vector<Eigen::Index> keep;
    for (Eigen::Index r = 0; r < m.p.A.rows(); ++r)
        if (m.p.A.row(r).head(nc).cwiseAbs().maxCoeff() > 0.0) keep.push_back(r);

    double best = std::numeric_limits<double>::infinity();
    for (long mask = 0; mask < (1L << nb); ++mask) {
        Eigen::VectorXd y(nb);
        for (int j = 0; j < nb; ++j) y(j) = (mask >> j) & 1 ? 1.0 : 0.0;
        oracle::DenseQp sub;
        sub.Q = Qcc;
        sub.c = m.p.c.head(nc) + Qcb * y;
        const auto rows = static_cast<Eigen::Index>(keep.size());
        sub.A.resize(rows, nc);
        sub.l.resize(rows);
        sub.u.resize(rows);
        for (Eigen::Index k = 0; k < rows; ++k) {
            const Eigen::Index r = keep[static_cast<std::size_t>(k)];
            const double shift = m.p.A.row(r).tail(nb).dot(y);
            sub.A.row(k) = m.p.A.row(r).head(nc);
            sub.l(k) = m.p.l(r) - shift;
            sub.u(k) = m.p.u(r) - shift;
        }
        const auto res = oracle::interior_point(sub);
        if (!res.converged) throw std::runtime_error("enumeration oracle did not converge");
        const double value = res.objective + 0.5 * y.dot(Qbb * y) + m.p.c.tail(nb).dot(y);
        best = std::min(best, value);
    }
    return best;
}

Outcome miqp_oracle() {
    std::mt19937_64 rng(7002);
    double worst = 0.0, solve_s = 0.0;
    int failures = 0, max_binaries = 0;
    for (int trial = 0; trial < 50; ++trial) {
        const RandomMiqp m = random_miqp(rng);
        max_binaries = std::max(max_binaries, m.nb);
        opt::MixedIntegerProgram mip;
        mip.base = support::to_qp(m.p);
        for (int j = 0; j < m.nb; ++j) mip.binary_indices.push_back(m.nc + j);
        opt::MiqpSettings s;
        s.rel_gap = 0.0;
        s.abs_gap = 1e-9;
        s.qp.tol = 1e-8;
        const auto t0 = Clock::now();
        const auto sol = opt::solve_miqp(mip, s);
        solve_s += seconds_since(t0);
        if (sol.status != opt::SolveStatus::optimal) {
            ++failures;
            continue;
        }
        worst = std::max(worst, std::abs(sol.objective - enumerate(m)));
    }
    const bool pass = failures == 0 && worst <= kMiqpObjTol && solve_s < kMiqpBudgetS;
    return {pass, fmt("50 MIQPs (up to %d binaries): %d not optimal, max |obj err| %.2e, %.2f s", max_binaries,
                      failures, worst, solve_s)};
}

// ---------------------------------------------------------------------------

struct Trained {
    icnn::Icnn net;
    double seconds{0.0};
    bool deterministic{false};
    double rmse{0.0};
};

Trained train_side(icnn::Side side) {
    const BatteryParams battery;
    const SurrogateConfig config;
    const auto data = icnn::generate_training_data(battery, side, config.train_points);
    Trained out;
    auto t0 = Clock::now();
    out.net = icnn::adam_train(data, config.widths, config.hyper);
    out.seconds = seconds_since(t0);
    const icnn::Icnn again = icnn::adam_train(data, config.widths, config.hyper);
    out.deterministic = icnn::flatten(out.net) == icnn::flatten(again);
    const auto grid = icnn::generate_training_data(battery, side, 512);
    out.rmse = icnn::rmse(out.net, grid.inputs, grid.targets);
    return out;
}

Outcome convexity(const Trained& charge, const Trained& discharge) {
    bool pass = true;
    std::string detail;
    for (const auto* t : {&charge, &discharge}) {
        const auto r = icnn::check_convexity(t->net, kConvexityPairs, 7003);
        const bool ok = r.pairs == kConvexityPairs && r.violations == 0 && t->net.satisfies_invariants();
        pass = pass && ok;
        detail += fmt("%s%s: %d violations in %d pairs, max %.1e, weights %s", detail.empty() ? "" : "; ",
                      t == &charge ? "charge" : "discharge", r.violations, r.pairs, r.max_violation,
                      t->net.satisfies_invariants() ? "non-negative" : "NEGATIVE");
    }
    return {pass, detail};
}

Outcome fit(const Trained& charge, const Trained& discharge) {
    bool pass = true;
    std::string detail;
    for (const auto* t : {&charge, &discharge}) {
        pass = pass && t->rmse <= kRmseTol && t->deterministic && t->seconds < kTrainBudgetS;
        detail += fmt("%s%s: rmse %.2e, %s, %.1f s", detail.empty() ? "" : "; ", t == &charge ? "charge" : "discharge",
                      t->rmse, t->deterministic ? "deterministic" : "NOT deterministic", t->seconds);
    }
    return {pass, detail};
}

// ---------------------------------------------------------------------------

double min_abs_pre_activation(const icnn::Icnn& net, std::span<const double> inputs) {
    double margin = std::numeric_limits<double>::infinity();
    for (const double x : inputs) {
        Eigen::VectorXd z = Eigen::VectorXd::Constant(1, x);
        for (std::size_t i = 0; i < net.num_layers(); ++i) {
            const auto& L = net.layers()[i];
            const Eigen::VectorXd pre = L.W * z + L.D.col(0) * x + L.b;
            margin = std::min(margin, pre.cwiseAbs().minCoeff());
            z = pre.cwiseMax(0.0);
        }
    }
    return margin;
}

double plain_loss(const icnn::Icnn& net, std::span<const double> inputs, std::span<const double> targets) {
    double sum = 0.0;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        const double r = net.forward(inputs[i]) - targets[i];
        sum += r * r;
    }
    return sum / static_cast<double>(inputs.size());
}

Outcome gradient_check() {
    const BatteryParams battery;
    std::mt19937_64 rng(7005);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    std::uniform_real_distribution<double> jitter(-0.5, 0.5);
    int accepted = 0, attempts = 0;
    double worst = 0.0;
    while (accepted < 100 && attempts < 100000) {
        ++attempts;
        const auto side = accepted % 2 == 0 ? icnn::Side::charge : icnn::Side::discharge;
        std::vector<double> inputs(16), targets(16);
        const auto ref = icnn::generate_training_data(battery, side, 1001);
        for (std::size_t i = 0; i < inputs.size(); ++i) {
            const auto j = static_cast<std::size_t>(U(rng) * 1000.0);
            inputs[i] = ref.inputs[j];
            targets[i] = ref.targets[j];
        }
        const icnn::Icnn shape = icnn::initialize(icnn::kDefaultWidths, rng());
        Eigen::VectorXd theta = icnn::flatten(shape);
        for (Eigen::Index i = 0; i < theta.size(); ++i) theta(i) += 0.2 * jitter(rng);
        const icnn::Icnn net = icnn::unflatten(shape, theta);
        if (min_abs_pre_activation(net, inputs) < kKinkMargin) continue;

        const auto g = icnn::mse_loss_gradient(net, inputs, targets).gradient;
        Eigen::VectorXd fd(theta.size());
        for (Eigen::Index i = 0; i < theta.size(); ++i) {
            Eigen::VectorXd hi = theta, lo = theta;
            hi(i) += kGradStep;
            lo(i) -= kGradStep;
            fd(i) = (plain_loss(icnn::unflatten(shape, hi), inputs, targets) -
                     plain_loss(icnn::unflatten(shape, lo), inputs, targets)) /
                    (2.0 * kGradStep);
        }
        const double scale = fd.lpNorm<Eigen::Infinity>();
        if (scale < 1e-8) continue;  // all units dead: nothing to compare
        worst = std::max(worst, (g - fd).lpNorm<Eigen::Infinity>() / scale);
        ++accepted;
    }
    const bool pass = accepted == 100 && worst <= kGradRelTol;
    return {pass, fmt("%d points (%d sampled), max relative error %.2e", accepted, attempts, worst)};
}

// ---------------------------------------------------------------------------

Surrogates as_surrogates(const Trained& charge, const Trained& discharge) {
    Surrogates s;
    s.charge = charge.net;
    s.discharge = discharge.net;
    s.trained = true;
    s.charge_rmse = charge.rmse;
    s.discharge_rmse = discharge.rmse;
    return s;
}

RunConfig default_config(UseCaseKind kind) {
    RunConfig c;
    c.use_case = kind;
    return c;
}

Outcome tightness(const Surrogates& nets) {
    bool pass = true;
    std::string detail;
    for (const auto kind : {UseCaseKind::pv_smoothing, UseCaseKind::revenue_max}) {
        const auto report = lambda_sweep(default_config(kind), nets, default_lambda_grid());
        double worst_gap = 0.0, worst_metric = 0.0;
        int not_optimal = 0;
        for (const auto& p : report.points) {
            if (p.status != "optimal") ++not_optimal;
            if (p.lambda >= kSweepLambdaMin * (1.0 - 1e-12)) worst_gap = std::max(worst_gap, p.feasibility_gap);
            if (p.feasibility_gap <= kSweepGapTol) {
                worst_metric = std::max(worst_metric,
                                        std::abs(p.predicted - p.actual) / std::max(std::abs(p.actual), 1e-12));
            }
        }
        pass = pass && not_optimal == 0 && worst_gap <= kSweepGapTol && worst_metric <= kSweepMetricRelTol;
        detail += fmt("%s%s: max gap for lambda >= 1e-3 %.3g, max metric mismatch at small gap %.2g%%, %d not optimal",
                      detail.empty() ? "" : "; ", to_string(kind).c_str(), worst_gap, 100.0 * worst_metric,
                      not_optimal);
    }
    return {pass, detail};
}

Outcome linear_mismatch() {
    bool pass = true;
    std::string detail;
    for (const auto kind : {UseCaseKind::pv_smoothing, UseCaseKind::revenue_max}) {
        const RunConfig config = default_config(kind);
        const UseCase uc = make_usecase(config);
        const auto r = two_stage_linear_solve(uc, config.battery);
        const bool direction =
            kind == UseCaseKind::pv_smoothing ? r.actual_metric > r.predicted_metric : r.actual_metric < r.predicted_metric;
        pass = pass && r.status == opt::SolveStatus::optimal && r.saturated() && direction;
        detail += fmt("%s%s: predicted %.4g, actual %.4g, %s", detail.empty() ? "" : "; ", to_string(kind).c_str(),
                      r.predicted_metric, r.actual_metric, r.saturated() ? "saturated" : "not saturated");
    }
    return {pass, detail};
}

// ---------------------------------------------------------------------------

struct BigMRun {
    UseCaseKind kind{};
    opt::Solution sol;
    DispatchResult result;
    double relaxed_bound{0.0};   // lambda = 0 objective
    double relaxed_actual{0.0};  // default-lambda actual metric
    double seconds{0.0};
};

BigMRun run_bigm(UseCaseKind kind, const Surrogates& nets) {
    RunConfig config = default_config(kind);
    config.data.steps = kBigMSteps;
    const UseCase uc = make_usecase(config);
    BigMRun out;
    out.kind = kind;
    const auto built = build_bigm_icnn(uc, config.battery, nets.charge, nets.discharge);
    opt::MiqpSettings s;
    s.rel_gap = config.mip_gap;
    s.node_limit = 1000000;
    s.time_limit_s = kBigMBudgetS;
    s.heuristic = built.heuristic;
    const auto t0 = Clock::now();
    out.sol = opt::solve_miqp(built.mip, s);
    out.seconds = seconds_since(t0);
    out.result = extract_result(out.sol, built.layout, uc, config.battery);

    const auto relaxed0 = build_relaxed_icnn(uc, config.battery, nets.charge, nets.discharge, 0.0);
    out.relaxed_bound = opt::solve_qp(relaxed0.qp).objective;
    const auto relaxed = build_relaxed_icnn(uc, config.battery, nets.charge, nets.discharge, default_lambda(kind));
    const auto rs = opt::solve_qp(relaxed.qp);
    out.relaxed_actual =
        extract_result(rs, relaxed.layout, uc, config.battery, &nets.charge, &nets.discharge).actual_metric;
    return out;
}

Outcome dominance(const std::vector<BigMRun>& runs) {
    bool pass = true;
    std::string detail;
    for (const auto& r : runs) {
        const bool has_point = r.sol.x.size() > 0 && std::isfinite(r.sol.objective);
        bool ok = has_point && r.sol.objective >= r.relaxed_bound - kDominanceTol;
        detail += fmt("%s%s K=%zu: big-M objective %.6g vs lambda=0 bound %.6g", detail.empty() ? "" : "; ",
                      to_string(r.kind).c_str(), kBigMSteps, r.sol.objective, r.relaxed_bound);
        if (r.kind == UseCaseKind::revenue_max) {
            ok = ok && r.result.actual_metric >= r.relaxed_actual - kRevenueRelTol * std::abs(r.relaxed_actual);
            detail += fmt(", actual revenue %.6g vs relaxed %.6g", r.result.actual_metric, r.relaxed_actual);
        }
        pass = pass && ok;
    }
    return {pass, detail};
}

Outcome performance(const Surrogates& nets, const std::vector<BigMRun>& runs) {
    bool pass = true;
    std::string detail;
    for (const auto kind : {UseCaseKind::pv_smoothing, UseCaseKind::revenue_max}) {
        const RunConfig config = default_config(kind);
        const UseCase uc = make_usecase(config);
        const auto t0 = Clock::now();
        const auto built = build_relaxed_icnn(uc, config.battery, nets.charge, nets.discharge, default_lambda(kind));
        const auto sol = opt::solve_qp(built.qp);
        const double s = seconds_since(t0);
        pass = pass && sol.status == opt::SolveStatus::optimal && s <= kRelaxedBudgetS;
        detail += fmt("%srelaxed %s K=192 %s in %.2f s", detail.empty() ? "" : "; ", to_string(kind).c_str(),
                      opt::to_string(sol.status).c_str(), s);
    }
    for (const auto& r : runs) {
        const bool ok = r.sol.status == opt::SolveStatus::optimal && r.sol.gap <= kBigMGapTol && r.seconds <= kBigMBudgetS;
        pass = pass && ok;
        detail += fmt("; big-M %s K=%zu %s, gap %.3g, %d nodes, %.1f s", to_string(r.kind).c_str(), kBigMSteps,
                      opt::to_string(r.sol.status).c_str(), r.sol.gap, r.sol.node_count, r.seconds);
    }
    return {pass, detail};
}

// ---------------------------------------------------------------------------

// Exhaustive search over the 0.01 grid of [0, 1]^2K for the penalized problem the
// NLP solver minimizes: objective plus SoC-bound and complementarity penalties,
// with the closed-form plant.
double grid_optimum(const UseCase& uc, double rho_bound, double rho_comp) {
    const oracle::Plant plant;
    const int levels = static_cast<int>(std::lround(1.0 / kNlpGridStep));
    std::vector<double> power(levels + 1), charge(levels + 1), discharge(levels + 1);
    for (int i = 0; i <= levels; ++i) {
        power[i] = i * kNlpGridStep;
        charge[i] = plant.charge_term(power[i]);
        discharge[i] = plant.discharge_term(power[i]);
    }
    const std::size_t K = uc.horizon;
    const double energy_scale = plant.dt * plant.p_max;
    std::vector<int> pc(K), pd(K);

    auto penalized = [&] {
        double value = 0.0, e = uc.e0;
        for (std::size_t k = 0; k < K; ++k) {
            const double c = power[pc[k]], d = power[pd[k]];
            e += plant.gain() * (charge[pc[k]] - discharge[pd[k]]);
            const double over = std::max(0.0, e - plant.e_max), under = std::max(0.0, plant.e_min - e);
            value += rho_bound * (over * over + under * under) + rho_comp * (c * d) * (c * d);
            if (uc.kind == UseCaseKind::revenue_max) value -= uc.data[k] * energy_scale * (d - c);
        }
        if (uc.kind == UseCaseKind::pv_smoothing) {
            auto net = [&](std::size_t k) {
                return uc.data[k] / plant.p_max + (k < K ? power[pd[k]] - power[pc[k]] : 0.0);
            };
            for (std::size_t k = 0; k < K; ++k) value += std::pow(net(k + 1) - net(k), 2);
        }
        return value;
    };

    double best = std::numeric_limits<double>::infinity();
    std::function<void(std::size_t)> walk = [&](std::size_t k) {
        if (k == K) {
            best = std::min(best, penalized());
            return;
        }
        for (pc[k] = 0; pc[k] <= levels; ++pc[k])
            for (pd[k] = 0; pd[k] <= levels; ++pd[k]) walk(k + 1);
    };
    walk(0);
    return best;
}

Outcome nlp_oracle() {
    const BatteryParams battery;
    std::mt19937_64 rng(7009);
    std::uniform_real_distribution<double> price(-0.05, 0.3), pv(0.0, 100.0);
    double worst = 0.0;
    int cases = 0, misses = 0;
    std::string missed;
    for (const std::size_t K : {1u, 2u}) {
        for (const double e0 : {0.5, 0.11, 0.89}) {
            for (const auto kind : {UseCaseKind::revenue_max, UseCaseKind::pv_smoothing}) {
                UseCase uc;
                uc.kind = kind;
                uc.horizon = K;
                uc.e0 = e0;
                const std::size_t points = kind == UseCaseKind::pv_smoothing ? K + 1 : K;
                for (std::size_t k = 0; k < points; ++k)
                    uc.data.push_back(kind == UseCaseKind::pv_smoothing ? pv(rng) : price(rng));
                const auto nlp = build_nlp(uc, battery);
                const auto res = opt::solve_nlp_multistart(nlp);
                const double ref = grid_optimum(uc, nlp.rho_bound, nlp.rho_comp);
                const double err = std::abs(res.penalized - ref);
                worst = std::max(worst, err);
                ++cases;
                if (err > kNlpObjTol) {
                    ++misses;
                    missed += fmt(" [%s K=%zu e0=%.2f: %.4f vs %.4f]", to_string(kind).c_str(), K, e0, res.penalized, ref);
                }
            }
        }
    }
    return {misses == 0, fmt("%d of %d cases with K <= 2 within tolerance, max |penalized obj - grid optimum| %.2e%s",
                             cases - misses, cases, worst, missed.c_str())};
}

// ---------------------------------------------------------------------------

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Outcome determinism(const Surrogates& nets) {
#ifdef BESS_HAVE_CLI
    const fs::path root = fs::temp_directory_path() / "bess_acceptance_determinism";
    fs::remove_all(root);
    fs::create_directories(root);
    icnn::save_model(nets.charge, root / "charge.json");
    icnn::save_model(nets.discharge, root / "discharge.json");
    bool pass = true;
    std::string detail;
    for (const char* use_case : {"smoothing", "revenue"}) {
        std::string reports[2];
        for (int run = 0; run < 2; ++run) {
            const fs::path dir = root / (std::string(use_case) + std::to_string(run));
            std::ostringstream out, err;
            const int code = cli::cli_main({"experiment", "--use-case", use_case, "--steps", "12", "--seed", "42",
                                            "--node-limit", "50", "--charge-model", (root / "charge.json").string(),
                                            "--discharge-model", (root / "discharge.json").string(), "--out-dir",
                                            dir.string()},
                                           out, err);
            if (code != 0) throw std::runtime_error("experiment failed: " + err.str());
            reports[run] = slurp(dir / "report.json") + slurp(dir / "schedules.csv");
        }
        const bool same = !reports[0].empty() && reports[0] == reports[1];
        pass = pass && same;
        detail += fmt("%s%s: report.json and schedules.csv %s (%zu bytes)", detail.empty() ? "" : "; ", use_case,
                      same ? "identical" : "DIFFER", reports[0].size());
    }
    fs::remove_all(root);
    return {pass, detail};
#else
    (void)nets;
    return {false, "built without the command-line tool"};
#endif
}

}  // namespace

int main(int argc, char** argv) {
    bool strict = false;
    std::set<std::string> only;  // criterion names given on the command line
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--strict") strict = true;
        else only.insert(arg);
    }
    const auto wanted = [&](const std::string& name) { return only.empty() || only.count(name) > 0; };

    int unexpected = 0;
    auto report = [&](const std::string& name, const std::function<Outcome()>& check) {
        if (!wanted(name)) return;
        const auto t0 = Clock::now();
        Outcome o;
        try {
            o = check();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        const bool expected = kExpectedFailures.count(name) > 0;
        if (!o.pass && (strict || !expected)) ++unexpected;
        std::cout << (o.pass ? "PASS " : "FAIL ") << name << (o.pass || !expected ? "" : " (expected)") << ": "
                  << o.detail << fmt(" [%.1f s]", seconds_since(t0)) << std::endl;
    };

    report("qp-solver", qp_oracle);
    report("miqp-solver", miqp_oracle);

    const bool need_nets = only.empty() || std::any_of(only.begin(), only.end(), [](const std::string& n) {
        return n != "qp-solver" && n != "miqp-solver" && n != "gradient-check" && n != "linear-mismatch" &&
               n != "nlp-oracle";
    });
    Trained charge, discharge;
    if (need_nets) {
        charge = train_side(icnn::Side::charge);
        discharge = train_side(icnn::Side::discharge);
    }
    const Surrogates nets = as_surrogates(charge, discharge);
    report("icnn-convexity", [&] { return convexity(charge, discharge); });
    report("icnn-fit", [&] { return fit(charge, discharge); });
    report("gradient-check", gradient_check);
    report("relaxation-tightness", [&] { return tightness(nets); });
    report("linear-mismatch", linear_mismatch);

    std::vector<BigMRun> runs;
    if (wanted("relaxation-dominance") || wanted("performance-envelope")) {
        try {
            runs.push_back(run_bigm(UseCaseKind::revenue_max, nets));
            runs.push_back(run_bigm(UseCaseKind::pv_smoothing, nets));
        } catch (const std::exception& e) {
            std::cout << "big-M runs threw: " << e.what() << std::endl;
        }
    }
    report("relaxation-dominance", [&] {
        if (runs.size() != 2) return Outcome{false, "big-M runs incomplete"};
        return dominance(runs);
    });
    report("nlp-oracle", nlp_oracle);
    report("determinism", [&] { return determinism(nets); });
    report("performance-envelope", [&] {
        if (runs.size() != 2) return Outcome{false, "big-M runs incomplete"};
        return performance(nets, runs);
    });
    return unexpected == 0 ? 0 : 1;
}
