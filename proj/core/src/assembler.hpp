#pragma once

// Row-by-row construction of QuadraticProgram instances.

#include <utility>
#include <vector>

#include "bess/qp.hpp"

namespace bess::detail {

using Term = std::pair<int, double>;  // (variable, coefficient)

class QpAssembler {
public:
    explicit QpAssembler(int n) : n_(n), c_(Eigen::VectorXd::Zero(n)) {}

    int row(const std::vector<Term>& terms, double lo, double hi) {
        const int r = static_cast<int>(l_.size());
        for (const auto& [j, v] : terms)
            if (v != 0.0) a_.emplace_back(r, j, v);
        l_.push_back(lo);
        u_.push_back(hi);
        return r;
    }

    int bound(int var, double lo, double hi) { return row({{var, 1.0}}, lo, hi); }

    void linear(int var, double coef) { c_(var) += coef; }

    /// Adds (offset + sum_j coef_j x_j)^2 to the objective.
    void square(const std::vector<Term>& terms, double offset) {
        for (const auto& [i, vi] : terms) {
            c_(i) += 2.0 * offset * vi;
            for (const auto& [j, vj] : terms) q_.emplace_back(i, j, 2.0 * vi * vj);
        }
        constant_ += offset * offset;
    }

    [[nodiscard]] int rows() const noexcept { return static_cast<int>(l_.size()); }

    opt::QuadraticProgram finish(std::vector<std::string> names = {}) const {
        opt::QuadraticProgram qp;
        qp.Q = opt::make_sparse(n_, n_, q_);
        qp.c = c_;
        qp.A = opt::make_sparse(rows(), n_, a_);
        qp.l = Eigen::Map<const Eigen::VectorXd>(l_.data(), static_cast<Eigen::Index>(l_.size()));
        qp.u = Eigen::Map<const Eigen::VectorXd>(u_.data(), static_cast<Eigen::Index>(u_.size()));
        qp.constant = constant_;
        qp.names = std::move(names);
        return qp;
    }

private:
    int n_;
    Eigen::VectorXd c_;
    double constant_{0.0};
    std::vector<opt::Triplet> a_;
    std::vector<opt::Triplet> q_;
    std::vector<double> l_;
    std::vector<double> u_;
};

}  // namespace bess::detail
