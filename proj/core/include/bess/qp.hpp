#pragma once

// Convex quadratic programs in the two-sided standard form
//
//     minimize    1/2 x' Q x + c' x + constant
//     subject to  l <= A x <= u
//
// Equalities are rows with l == u; variable bounds are identity rows.

#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

namespace bess::opt {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;
using Triplet = Eigen::Triplet<double, int>;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct QuadraticProgram {
    SparseMatrix Q;  // symmetric positive semidefinite, n x n
    Eigen::VectorXd c;
    SparseMatrix A;  // m x n
    Eigen::VectorXd l;
    Eigen::VectorXd u;
    double constant{0.0};
    std::vector<std::string> names;  // optional variable labels

    [[nodiscard]] Eigen::Index num_vars() const noexcept { return c.size(); }
    [[nodiscard]] Eigen::Index num_constraints() const noexcept { return l.size(); }

    [[nodiscard]] double objective(const Eigen::VectorXd& x) const;

    /// Dimensions, l <= u, symmetry of Q and min eigenvalue >= -eig_tol.
    /// Throws bess::DomainError on failure.
    void validate(double eig_tol = 1e-8) const;
};

enum class SolveStatus { optimal, max_iter, infeasible, unbounded };

std::string to_string(SolveStatus status);

struct Solution {
    Eigen::VectorXd x;
    Eigen::VectorXd y;  // constraint multipliers; Qx + c + A'y = 0 at optimality
    double objective{kInf};
    SolveStatus status{SolveStatus::max_iter};
    int iterations{0};
    double solve_time_s{0.0};
    bool polished{false};

    // Branch-and-bound only.
    int node_count{0};
    double gap{kInf};
    double bound{-kInf};
    std::vector<double> incumbent_history;
};

struct QpSettings {
    double tol{1e-6};
    int max_iter{50000};
    double rho{0.1};
    double sigma{1e-6};
    double alpha{1.6};           // over-relaxation
    bool adaptive_rho{true};
    int check_interval{25};
    bool scaling{true};
    int scaling_iterations{10};
    bool polish{true};
    double infeasibility_tol{1e-7};
    bool validate{true};  // run QuadraticProgram::validate() before solving
};

/// ADMM operator splitting with over-relaxation and active-set polishing.
Solution solve_qp(const QuadraticProgram& qp, const QpSettings& settings = {});

struct KktResiduals {
    double primal{0.0};           // constraint violation, inf-norm
    double dual{0.0};             // stationarity, inf-norm
    double complementarity{0.0};  // complementary slackness, inf-norm
};

/// Residuals at sol.x / sol.y measured on the unscaled problem.
KktResiduals kkt_residuals(const QuadraticProgram& qp, const Solution& sol);

/// Builds a sparse matrix from triplets.
SparseMatrix make_sparse(Eigen::Index rows, Eigen::Index cols, const std::vector<Triplet>& triplets);

}  // namespace bess::opt
