#pragma once

// Nonconvex dispatch with the true plant curves, penalized into a box-constrained
// problem and solved locally from several starting points.
//
//   minimize  f0(p_c, p_d)
//           + rho_bound * sum_k [max(0, e[k] - e_max)^2 + max(0, e_min - e[k])^2]
//           + rho_comp  * sum_k (p_c[k] p_d[k])^2
//   over      p_c, p_d in [0, 1]^K
//
// with e obtained by forward simulation of the SoC equation (single shooting).

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "bess/erm.hpp"

namespace bess::opt {

using ScheduleObjective = std::function<double(std::span<const double> p_c, std::span<const double> p_d)>;

struct NlpProblem {
    ScheduleObjective objective;
    std::size_t horizon{0};
    BatteryParams params{};
    double e0{0.5};
    double rho_bound{1e3};
    double rho_comp{1e3};

    void validate() const;

    /// Objective plus both penalties.
    [[nodiscard]] double penalized(std::span<const double> p_c, std::span<const double> p_d) const;
};

struct NlpSettings {
    int n_starts{10};  // random starts; the all-zeros start is always added
    std::uint64_t seed{1};
    int max_iter{2000};
    double fd_step{1e-6};
    double armijo{1e-4};
    double step_tol{1e-12};
};

struct NlpResult {
    DispatchSchedule schedule;
    double objective{0.0};         // f0 at the returned schedule
    double penalized{0.0};         // f0 plus penalties
    double bound_violation{0.0};   // sum of squared SoC bound excursions
    double comp_violation{0.0};    // sum of (p_c p_d)^2
    std::vector<double> start_penalized;  // final penalized value per start, zeros start first
    int iterations{0};             // over all starts
    double solve_time_s{0.0};
};

/// Thrown when every start produced a non-finite objective.
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Projected gradient with Armijo backtracking; gradients by central differences
/// (one-sided where the box would be left).
NlpResult solve_nlp_multistart(const NlpProblem& nlp, const NlpSettings& settings = {});

}  // namespace bess::opt
