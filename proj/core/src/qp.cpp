#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>

#include "bess/erm.hpp"
#include "bess/qp.hpp"

namespace bess::opt {

SparseMatrix make_sparse(Eigen::Index rows, Eigen::Index cols, const std::vector<Triplet>& triplets) {
    SparseMatrix m(rows, cols);
    m.setFromTriplets(triplets.begin(), triplets.end());
    m.makeCompressed();
    return m;
}

std::string to_string(SolveStatus status) {
    switch (status) {
        case SolveStatus::optimal: return "optimal";
        case SolveStatus::max_iter: return "max_iter";
        case SolveStatus::infeasible: return "infeasible";
        case SolveStatus::unbounded: return "unbounded";
    }
    return "unknown";
}

double QuadraticProgram::objective(const Eigen::VectorXd& x) const {
    return 0.5 * x.dot(Q * x) + c.dot(x) + constant;
}

void QuadraticProgram::validate(double eig_tol) const {
    const Eigen::Index n = c.size();
    if (Q.rows() != n || Q.cols() != n) throw DomainError("Q must be n x n with n = len(c)");
    if (A.cols() != n) throw DomainError("A must have n columns");
    if (A.rows() != l.size() || A.rows() != u.size()) throw DomainError("bounds must have one entry per row of A");
    if (!names.empty() && static_cast<Eigen::Index>(names.size()) != n) {
        throw DomainError("names must be empty or have one label per variable");
    }
    for (Eigen::Index i = 0; i < l.size(); ++i) {
        if (std::isnan(l(i)) || std::isnan(u(i)) || l(i) > u(i)) {
            throw DomainError("constraint row " + std::to_string(i) + " has l > u");
        }
    }
    if (!c.allFinite()) throw DomainError("c must be finite");

    const SparseMatrix asym = SparseMatrix(Q.transpose()) - Q;
    double scale = 1.0;
    for (int k = 0; k < Q.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(Q, k); it; ++it) scale = std::max(scale, std::abs(it.value()));
    for (int k = 0; k < asym.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(asym, k); it; ++it)
            if (std::abs(it.value()) > 1e-12 * scale) throw DomainError("Q is not symmetric");

    if (n == 0 || Q.nonZeros() == 0) return;
    if (n <= 400) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Eigen::MatrixXd(Q), Eigen::EigenvaluesOnly);
        if (eig.eigenvalues().minCoeff() < -eig_tol) throw DomainError("Q is not positive semidefinite");
        return;
    }
    // Sylvester inertia: Q + eig_tol I is positive definite iff its LDL' pivots are positive.
    SparseMatrix shifted = Q;
    for (Eigen::Index i = 0; i < n; ++i) shifted.coeffRef(i, i) += eig_tol;
    Eigen::SimplicialLDLT<SparseMatrix> ldlt(shifted);
    if (ldlt.info() != Eigen::Success || (ldlt.vectorD().array() <= 0.0).any()) {
        throw DomainError("Q is not positive semidefinite");
    }
}

KktResiduals kkt_residuals(const QuadraticProgram& qp, const Solution& sol) {
    KktResiduals out;
    const Eigen::VectorXd ax = qp.A * sol.x;
    Eigen::VectorXd y = sol.y;
    if (y.size() != ax.size()) y = Eigen::VectorXd::Zero(ax.size());

    for (Eigen::Index i = 0; i < ax.size(); ++i) {
        out.primal = std::max({out.primal, qp.l(i) - ax(i), ax(i) - qp.u(i)});
        double comp = 0.0;
        if (y(i) > 0.0) {
            comp = std::isfinite(qp.u(i)) ? y(i) * std::abs(qp.u(i) - ax(i)) : y(i);
        } else if (y(i) < 0.0) {
            comp = std::isfinite(qp.l(i)) ? -y(i) * std::abs(ax(i) - qp.l(i)) : -y(i);
        }
        out.complementarity = std::max(out.complementarity, comp);
    }
    Eigen::VectorXd stationarity = qp.Q * sol.x + qp.c;
    if (ax.size() > 0) stationarity += qp.A.transpose() * y;
    out.dual = stationarity.size() > 0 ? stationarity.cwiseAbs().maxCoeff() : 0.0;
    return out;
}

}  // namespace bess::opt
