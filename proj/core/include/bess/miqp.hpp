#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "bess/qp.hpp"

namespace bess::opt {

struct MixedIntegerProgram {
    QuadraticProgram base;
    std::vector<int> binary_indices;  // variables restricted to {0, 1}

    /// Base QP invariants plus valid, distinct binary indices whose bound rows stay within [0, 1].
    void validate() const;
};

/// Proposes values for every binary (in binary_indices order) from a relaxed point.
/// The solver fixes the proposal and solves the remaining QP to get a feasible incumbent.
using BinaryHeuristic = std::function<std::optional<std::vector<double>>(const Eigen::VectorXd& relaxed_x)>;

struct MiqpSettings {
    double rel_gap{1e-4};
    double abs_gap{1e-7};
    int node_limit{100000};
    double integrality_tol{1e-5};
    double time_limit_s{kInf};  // wall-clock cap; leaves results timing dependent
    QpSettings qp{};
    int node_max_iter{10000};  // ADMM cap per node; an unconverged node inherits its parent's bound
    BinaryHeuristic heuristic{};
    int heuristic_interval{10};  // run the heuristic every this many nodes (root always)
};

/// Best-first branch and bound. Node relaxations go through solve_qp; branching
/// picks the binary closest to 0.5, lowest index on ties.
Solution solve_miqp(const MixedIntegerProgram& mip, const MiqpSettings& settings = {});

}  // namespace bess::opt
