#include "bess/miqp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <queue>
#include <set>

#include "bess/erm.hpp"

namespace bess::opt {

void MixedIntegerProgram::validate() const {
    base.validate();
    std::set<int> seen;
    for (int j : binary_indices) {
        if (j < 0 || j >= base.num_vars()) throw DomainError("binary index " + std::to_string(j) + " out of range");
        if (!seen.insert(j).second) throw DomainError("binary index " + std::to_string(j) + " repeated");
    }
    // Single-entry rows on a binary act as its bounds and must not leave [0, 1].
    const SparseMatrix At = base.A.transpose();
    std::vector<int> count(static_cast<std::size_t>(base.num_constraints()), 0);
    for (int k = 0; k < At.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(At, k); it; ++it) ++count[static_cast<std::size_t>(k)];
    for (int r = 0; r < At.outerSize(); ++r) {
        if (count[static_cast<std::size_t>(r)] != 1) continue;
        SparseMatrix::InnerIterator it(At, r);
        const int j = static_cast<int>(it.row());
        if (!seen.contains(j) || it.value() == 0.0) continue;
        const double lo = std::min(base.l(r) / it.value(), base.u(r) / it.value());
        const double hi = std::max(base.l(r) / it.value(), base.u(r) / it.value());
        if (hi < 0.0 || lo > 1.0 || (std::isfinite(lo) && lo < -1e-12) || (std::isfinite(hi) && hi > 1.0 + 1e-12)) {
            throw DomainError("bounds of binary variable " + std::to_string(j) + " leave [0, 1]");
        }
    }
}

namespace {

struct Node {
    double bound;
    long id;
    int depth;
    std::vector<signed char> fixed;  // -1 free, 0 or 1 fixed, per binary
};

struct NodeOrder {
    bool operator()(const Node& a, const Node& b) const {
        if (a.bound != b.bound) return a.bound > b.bound;
        return a.id > b.id;
    }
};

class BranchAndBound {
public:
    BranchAndBound(const MixedIntegerProgram& mip, const MiqpSettings& settings) : mip_(mip), s_(settings) {}
    Solution run();

private:
    void attach_bound_rows();
    void apply(const std::vector<signed char>& fixed);
    Solution relax(const std::vector<signed char>& fixed);
    void settle_binaries(Eigen::VectorXd& x, const std::vector<signed char>& fixed) const;
    bool consider(const Solution& candidate);
    void run_heuristic(const Eigen::VectorXd& relaxed);
    double prune_threshold() const;

    const MixedIntegerProgram& mip_;
    const MiqpSettings& s_;
    QuadraticProgram work_;
    std::vector<Eigen::Index> bound_row_;
    std::vector<double> bound_coef_;
    Eigen::VectorXd base_l_, base_u_;
    Solution incumbent_;
    bool have_incumbent_{false};
    std::vector<double> history_;
    std::vector<bool> cost_free_;  // binary absent from the objective
};

void BranchAndBound::attach_bound_rows() {
    work_ = mip_.base;
    const std::size_t nb = mip_.binary_indices.size();
    bound_row_.assign(nb, -1);
    bound_coef_.assign(nb, 1.0);

    std::vector<int> slot(static_cast<std::size_t>(work_.num_vars()), -1);
    for (std::size_t b = 0; b < nb; ++b) slot[static_cast<std::size_t>(mip_.binary_indices[b])] = static_cast<int>(b);

    const SparseMatrix At = work_.A.transpose();
    for (int r = 0; r < At.outerSize(); ++r) {
        int nnz = 0;
        Eigen::Index col = -1;
        double value = 0.0;
        for (SparseMatrix::InnerIterator it(At, r); it; ++it) {
            ++nnz;
            col = it.row();
            value = it.value();
        }
        if (nnz != 1 || value == 0.0) continue;
        const int b = slot[static_cast<std::size_t>(col)];
        if (b >= 0 && bound_row_[static_cast<std::size_t>(b)] < 0) {
            bound_row_[static_cast<std::size_t>(b)] = r;
            bound_coef_[static_cast<std::size_t>(b)] = value;
        }
    }

    std::vector<Triplet> extra;
    Eigen::Index rows = work_.num_constraints();
    std::vector<double> extra_l, extra_u;
    for (std::size_t b = 0; b < nb; ++b) {
        if (bound_row_[b] >= 0) continue;
        extra.emplace_back(static_cast<int>(rows), mip_.binary_indices[b], 1.0);
        bound_row_[b] = rows++;
        extra_l.push_back(0.0);
        extra_u.push_back(1.0);
    }
    if (!extra.empty()) {
        std::vector<Triplet> trip;
        for (int k = 0; k < work_.A.outerSize(); ++k)
            for (SparseMatrix::InnerIterator it(work_.A, k); it; ++it)
                trip.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
        trip.insert(trip.end(), extra.begin(), extra.end());
        const Eigen::Index old_rows = work_.num_constraints();
        work_.A = make_sparse(rows, work_.num_vars(), trip);
        work_.l.conservativeResize(rows);
        work_.u.conservativeResize(rows);
        for (std::size_t i = 0; i < extra_l.size(); ++i) {
            work_.l(old_rows + static_cast<Eigen::Index>(i)) = extra_l[i];
            work_.u(old_rows + static_cast<Eigen::Index>(i)) = extra_u[i];
        }
    }
    base_l_ = work_.l;
    base_u_ = work_.u;

    cost_free_.assign(nb, true);
    for (std::size_t b = 0; b < nb; ++b) {
        const int j = mip_.binary_indices[b];
        cost_free_[b] = work_.c(j) == 0.0 && work_.Q.col(j).nonZeros() == 0;
        for (SparseMatrix::InnerIterator it(work_.Q, j); it; ++it)
            if (it.value() != 0.0) cost_free_[b] = false;
    }
}

// The relaxation optimum is often degenerate: a binary that appears in no cost
// term can sit anywhere in an interval without changing the objective. Moving
// such binaries onto 0 or 1 whenever no row gets worse gives an equally optimal
// point with fewer fractional entries to branch on.
void BranchAndBound::settle_binaries(Eigen::VectorXd& x, const std::vector<signed char>& fixed) const {
    constexpr double kSlack = 1e-9;
    Eigen::VectorXd ax = work_.A * x;
    auto excess = [&](Eigen::Index r, double v) { return std::max({0.0, work_.l(r) - v, v - work_.u(r)}); };
    for (std::size_t b = 0; b < fixed.size(); ++b) {
        if (fixed[b] >= 0 || !cost_free_[b]) continue;
        const int j = mip_.binary_indices[b];
        const double v = x(j);
        if (std::abs(v - std::round(v)) <= s_.integrality_tol) continue;
        const double near = std::clamp(std::round(v), 0.0, 1.0);
        for (const double target : {near, 1.0 - near}) {
            const double delta = target - v;
            bool ok = true;
            for (SparseMatrix::InnerIterator it(work_.A, j); it && ok; ++it) {
                const Eigen::Index r = it.row();
                ok = excess(r, ax(r) + it.value() * delta) <= excess(r, ax(r)) + kSlack;
            }
            if (!ok) continue;
            for (SparseMatrix::InnerIterator it(work_.A, j); it; ++it) ax(it.row()) += it.value() * delta;
            x(j) = target;
            break;
        }
    }
}

void BranchAndBound::apply(const std::vector<signed char>& fixed) {
    work_.l = base_l_;
    work_.u = base_u_;
    for (std::size_t b = 0; b < fixed.size(); ++b) {
        if (fixed[b] < 0) continue;
        const Eigen::Index r = bound_row_[b];
        const double v = bound_coef_[b] * static_cast<double>(fixed[b]);
        // Fixing outside the row's own bounds makes the node infeasible; keep l <= u.
        if (v < base_l_(r) - 1e-12 || v > base_u_(r) + 1e-12) {
            work_.l(r) = base_l_(r);
            work_.u(r) = base_l_(r) - 1.0;
            continue;
        }
        work_.l(r) = v;
        work_.u(r) = v;
    }
}

Solution BranchAndBound::relax(const std::vector<signed char>& fixed) {
    apply(fixed);
    for (Eigen::Index r = 0; r < work_.num_constraints(); ++r) {
        if (work_.l(r) > work_.u(r)) {
            Solution s;
            s.status = SolveStatus::infeasible;
            return s;
        }
    }
    QpSettings qs = s_.qp;
    qs.validate = false;
    qs.max_iter = std::min(qs.max_iter, s_.node_max_iter);
    return solve_qp(work_, qs);
}

double BranchAndBound::prune_threshold() const {
    if (!have_incumbent_) return kInf;
    const double inc = incumbent_.objective;
    return inc - std::max(s_.rel_gap * std::abs(inc), s_.abs_gap);
}

bool BranchAndBound::consider(const Solution& candidate) {
    if (candidate.status != SolveStatus::optimal) return false;
    if (have_incumbent_ && candidate.objective >= incumbent_.objective) return false;
    incumbent_ = candidate;
    for (int j : mip_.binary_indices) incumbent_.x(j) = std::round(incumbent_.x(j));
    have_incumbent_ = true;
    history_.push_back(incumbent_.objective);
    return true;
}

void BranchAndBound::run_heuristic(const Eigen::VectorXd& relaxed) {
    if (!s_.heuristic) return;
    const auto proposal = s_.heuristic(relaxed);
    if (!proposal || proposal->size() != mip_.binary_indices.size()) return;
    std::vector<signed char> fixed(proposal->size());
    for (std::size_t b = 0; b < fixed.size(); ++b) fixed[b] = (*proposal)[b] >= 0.5 ? 1 : 0;
    consider(relax(fixed));
}

Solution BranchAndBound::run() {
    const auto t0 = std::chrono::steady_clock::now();
    attach_bound_rows();
    const std::size_t nb = mip_.binary_indices.size();

    std::priority_queue<Node, std::vector<Node>, NodeOrder> open;
    long next_id = 0;
    open.push(Node{-kInf, next_id++, 0, std::vector<signed char>(nb, -1)});
    int processed = 0;
    bool limit_hit = false;
    double best_open_bound = -kInf;

    while (!open.empty()) {
        if (processed >= s_.node_limit ||
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() > s_.time_limit_s) {
            limit_hit = true;
            break;
        }
        Node node = open.top();
        open.pop();
        if (node.bound >= prune_threshold()) continue;

        const Solution relaxed = relax(node.fixed);
        ++processed;
        if (relaxed.status == SolveStatus::infeasible) continue;
        if (relaxed.status == SolveStatus::unbounded) {
            Solution out;
            out.status = SolveStatus::unbounded;
            out.objective = -kInf;
            out.node_count = processed;
            return out;
        }
        // An unconverged relaxation proves nothing about the bound.
        const double node_bound =
            relaxed.status == SolveStatus::optimal ? std::max(node.bound, relaxed.objective) : node.bound;
        if (node_bound >= prune_threshold()) continue;

        if (processed == 1 || (s_.heuristic_interval > 0 && processed % s_.heuristic_interval == 0)) {
            run_heuristic(relaxed.x);
            if (node_bound >= prune_threshold()) continue;
        }

        Solution settled = relaxed;
        settle_binaries(settled.x, node.fixed);

        // Most fractional binary, lowest index on ties.
        int pick = -1;
        double best_dist = 0.5;
        for (std::size_t b = 0; b < nb; ++b) {
            if (node.fixed[b] >= 0) continue;
            const double v = settled.x(mip_.binary_indices[b]);
            const double frac = std::abs(v - std::round(v));
            if (frac <= s_.integrality_tol) continue;
            const double dist = std::abs(v - 0.5);
            if (pick < 0 || dist < best_dist) {
                pick = static_cast<int>(b);
                best_dist = dist;
            }
        }
        if (pick < 0) {
            if (settled.status == SolveStatus::optimal) consider(settled);
            continue;
        }
        for (signed char value : {static_cast<signed char>(0), static_cast<signed char>(1)}) {
            Node child{node_bound, next_id++, node.depth + 1, node.fixed};
            child.fixed[static_cast<std::size_t>(pick)] = value;
            open.push(std::move(child));
        }
    }

    Solution out = have_incumbent_ ? incumbent_ : Solution{};
    out.node_count = processed;
    out.incumbent_history = history_;
    out.solve_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    best_open_bound = open.empty() ? kInf : open.top().bound;
    if (!have_incumbent_) {
        out.status = limit_hit ? SolveStatus::max_iter : SolveStatus::infeasible;
        out.objective = kInf;
        out.bound = limit_hit ? best_open_bound : kInf;
        return out;
    }
    const double inc = incumbent_.objective;
    const double bound = std::min(inc, best_open_bound);
    out.bound = bound;
    out.gap = std::max(0.0, inc - bound) / std::max(std::abs(inc), 1e-10);
    out.status = limit_hit ? SolveStatus::max_iter : SolveStatus::optimal;
    return out;
}

}  // namespace

Solution solve_miqp(const MixedIntegerProgram& mip, const MiqpSettings& settings) {
    mip.validate();
    BranchAndBound bnb(mip, settings);
    return bnb.run();
}

}  // namespace bess::opt
