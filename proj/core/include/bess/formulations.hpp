#pragma once

// Builders for the four dispatch formulations (nonlinear, constant-efficiency
// linear, epigraph-relaxed ICNN, Big-M ICNN) under the two use cases.
//
// Powers are per-unit of the rating throughout. Solver objectives (minimization):
//   PV smoothing  sum_k (net[k+1] - net[k])^2, net[k] = pv[k]/P - p_c[k] + p_d[k],
//                 per-unit squared, battery idle at the terminal point k = K
//   revenue       -sum_k LMP[k] * dt * P * (p_d[k] - p_c[k]), dollars
// Reported metrics: smoothing MSE in kW^2, revenue in dollars.

#include <limits>
#include <span>
#include <string>
#include <vector>

#include "bess/erm.hpp"
#include "bess/icnn.hpp"
#include "bess/layout.hpp"
#include "bess/miqp.hpp"
#include "bess/nlp.hpp"
#include "bess/qp.hpp"

namespace bess {

enum class UseCaseKind { pv_smoothing, revenue_max };

std::string to_string(UseCaseKind kind);
UseCaseKind parse_use_case(const std::string& text);

struct UseCase {
    UseCaseKind kind{UseCaseKind::pv_smoothing};
    std::vector<double> data;  // PV forecast in kW (K+1 values) or LMP in $/kWh (K values)
    std::size_t horizon{0};
    double e0{0.5};

    void validate(const BatteryParams& params) const;
};

inline constexpr double kDefaultEtaC = 0.92;
inline constexpr double kDefaultEtaD = 0.95;
inline constexpr double kDefaultAlpha = 1e-3;
inline constexpr double kDefaultBigM = 4.0;
inline constexpr double kDefaultRho = 1e3;

/// 1.6e-3 for PV smoothing, 4.3e-3 for revenue.
double default_lambda(UseCaseKind kind);

/// Minimization objective of a schedule, in the units above.
double usecase_objective(const UseCase& uc, const BatteryParams& params, std::span<const double> p_c,
                         std::span<const double> p_d);

/// Smoothing MSE (kW^2) over the K+1 net points, or revenue in dollars.
double usecase_metric(const UseCase& uc, const BatteryParams& params, const DispatchSchedule& schedule);

struct BuiltQp {
    opt::QuadraticProgram qp;
    VariableLayout layout;
};

struct BuiltMiqp {
    opt::MixedIntegerProgram mip;
    VariableLayout layout;
    opt::BinaryHeuristic heuristic;  // forward-pass rounding of a relaxed point
};

/// Constant-efficiency model with the p_c + p_d <= 1 cut. Variables p_c, p_d, e.
BuiltQp build_linear(const UseCase& uc, const BatteryParams& params, double eta_c = kDefaultEtaC,
                     double eta_d = kDefaultEtaD);

/// Epigraph relaxation of both surrogates plus lambda times the sum of every
/// relaxed unit. Variables p_c, p_d, e, z_c1..z_cN, z_d1..z_dN.
/// SoC: e[k+1] = e[k] + gain * (z_cN[k] - z_dN[k]).
BuiltQp build_relaxed_icnn(const UseCase& uc, const BatteryParams& params, const icnn::Icnn& f_net,
                           const icnn::Icnn& g_net, double lambda);

struct BigMOptions {
    double M{kDefaultBigM};
    /// Pin the selector of units whose pre-activation sign is fixed over p in [0, 1].
    bool fix_stable_units{true};
    /// Per-unit constants min(M, exact range of the pre-activation over p in [0, 1]).
    bool tighten{true};
};

/// Big-M encoding of every ReLU (y = 1 forces F = 0, y = 0 forces F = affine part)
/// and a charge/discharge selector w with p_c <= w, p_d <= 1 - w.
/// Variables p_c, p_d, e, F_c*, F_d*, y_c*, y_d*, w; binaries are the y and w blocks.
BuiltMiqp build_bigm_icnn(const UseCase& uc, const BatteryParams& params, const icnn::Icnn& f_net,
                          const icnn::Icnn& g_net, const BigMOptions& options = {});

/// True plant curves with SoC bound and complementarity penalties.
opt::NlpProblem build_nlp(const UseCase& uc, const BatteryParams& params, double rho_bound = kDefaultRho,
                          double rho_comp = kDefaultRho);

/// Sum over steps, layers and units of z - relu(W z_prev + D p + b), with z_prev
/// the solved previous-layer values. Works on relaxed (z_*) and Big-M (F_*) layouts.
double feasibility_gap(const Eigen::VectorXd& x, const VariableLayout& layout, const icnn::Icnn& f_net,
                       const icnn::Icnn& g_net);

struct BigMAudit {
    double max_mismatch{0.0};
    int mismatches{0};
    [[nodiscard]] bool ok() const noexcept { return mismatches == 0; }
};

/// Compares every F against the forward pass at the solved powers.
BigMAudit audit_bigm(const Eigen::VectorXd& x, const VariableLayout& layout, const icnn::Icnn& f_net,
                     const icnn::Icnn& g_net, double tol = 1e-6);

/// Scheduled powers below this are solver noise and are read as exactly 0.
inline constexpr double kPowerSnap = 1e-6;

struct DispatchResult {
    DispatchSchedule schedule;
    std::vector<double> predicted_soc;  // the formulation's own model, K+1 points
    Trajectory actual;                  // plant simulation
    double predicted_metric{std::numeric_limits<double>::quiet_NaN()};
    double actual_metric{std::numeric_limits<double>::quiet_NaN()};
    double objective{std::numeric_limits<double>::quiet_NaN()};  // solver objective
    double feasibility_gap{std::numeric_limits<double>::quiet_NaN()};
    opt::SolveStatus status{opt::SolveStatus::max_iter};
    double solve_time_s{0.0};
    int iterations{0};
    int node_count{0};
    double mip_gap{std::numeric_limits<double>::quiet_NaN()};
    bool degraded{false};  // two-stage repair fell back to the stage-1 schedule

    /// True when the plant cut at least one scheduled power.
    [[nodiscard]] bool saturated() const;
};

/// Reads (p_c, p_d) from x, snaps noise, clamps to [0, 1], and evaluates predicted
/// and actual metrics. The predicted SoC comes from the e block when the layout
/// has one, otherwise from the plant equation without saturation.
DispatchResult extract_result(const opt::Solution& sol, const VariableLayout& layout, const UseCase& uc,
                              const BatteryParams& params, const icnn::Icnn* f_net = nullptr,
                              const icnn::Icnn* g_net = nullptr);

/// Same evaluation for a schedule produced outside the QP path.
DispatchResult evaluate_schedule(DispatchSchedule schedule, std::vector<double> predicted_soc, const UseCase& uc,
                                 const BatteryParams& params);

/// Linear solve, then fix p_d = 0 where p_c - p_d >= alpha and p_c = 0 where
/// p_c - p_d <= -alpha, and solve again. Falls back to stage 1 (degraded) when
/// stage 2 fails. solve_time_s covers both solves.
DispatchResult two_stage_linear_solve(const UseCase& uc, const BatteryParams& params, double alpha = kDefaultAlpha,
                                      const opt::QpSettings& settings = {}, double eta_c = kDefaultEtaC,
                                      double eta_d = kDefaultEtaD, DispatchResult* stage1 = nullptr);

}  // namespace bess
