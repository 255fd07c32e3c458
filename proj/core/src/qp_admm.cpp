// ADMM for l <= Ax <= u, in the style of OSQP: Ruiz equilibration, a cached
// factorization of P + sigma I + A' R A, over-relaxation, residual-balancing
// rho updates, infeasibility certificates and an active-set polish.

#include <algorithm>
#include <chrono>
#include <cmath>

#include <Eigen/SparseCholesky>

#include "bess/qp.hpp"

namespace bess::opt {

namespace {

using Vec = Eigen::VectorXd;

constexpr double kMinScaling = 1e-4;
constexpr double kMaxScaling = 1e4;
constexpr double kRhoMin = 1e-6;
constexpr double kRhoMax = 1e6;
constexpr double kEqualityRhoFactor = 1e3;
constexpr double kPolishDelta = 1e-6;
constexpr int kPolishRefinement = 5;
constexpr int kPolishCorrections = 8;

double inf_norm(const Vec& v) { return v.size() > 0 ? v.cwiseAbs().maxCoeff() : 0.0; }

Vec col_inf_norms(const SparseMatrix& M) {
    Vec out = Vec::Zero(M.cols());
    for (int k = 0; k < M.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(M, k); it; ++it) out(k) = std::max(out(k), std::abs(it.value()));
    return out;
}

Vec row_inf_norms(const SparseMatrix& M) {
    Vec out = Vec::Zero(M.rows());
    for (int k = 0; k < M.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(M, k); it; ++it)
            out(it.row()) = std::max(out(it.row()), std::abs(it.value()));
    return out;
}

Vec limit_scaling(Vec norms) {
    for (Eigen::Index i = 0; i < norms.size(); ++i) {
        double v = norms(i);
        if (v < kMinScaling) v = 1.0;
        norms(i) = 1.0 / std::sqrt(std::min(v, kMaxScaling));
    }
    return norms;
}

class AdmmSolver {
public:
    AdmmSolver(const QuadraticProgram& qp, const QpSettings& settings)
        : qp_(qp), s_(settings), n_(qp.num_vars()), m_(qp.num_constraints()) {}

    Solution run();

private:
    void scale_problem();
    void update_rho_vector();
    bool factorize();
    void unscaled_residuals(const Vec& x, const Vec& z, const Vec& y, double& prim, double& dual) const;
    bool primal_infeasible(const Vec& dy) const;
    bool dual_infeasible(const Vec& dx) const;
    bool polish(Solution& out, double proximity) const;
    void finish(Solution& out, const Vec& xs, const Vec& ys) const;

    const QuadraticProgram& qp_;
    const QpSettings& s_;
    Eigen::Index n_;
    Eigen::Index m_;

    // Scaled data: P = c D Q D, q = c D c_orig, A = E A_orig D, l = E l_orig, u = E u_orig.
    SparseMatrix P_;
    SparseMatrix A_;
    SparseMatrix At_;
    Vec q_, l_, u_;
    Vec D_, E_;
    double cost_scale_{1.0};

    double rho_{0.1};
    Vec rho_vec_;
    std::vector<bool> is_equality_;
    Eigen::SimplicialLDLT<SparseMatrix> ldlt_;
    bool pattern_ready_{false};
};

void AdmmSolver::scale_problem() {
    P_ = qp_.Q;
    A_ = qp_.A;
    q_ = qp_.c;
    D_ = Vec::Ones(n_);
    E_ = Vec::Ones(m_);
    cost_scale_ = 1.0;
    if (s_.scaling) {
        for (int it = 0; it < s_.scaling_iterations; ++it) {
            Vec col = col_inf_norms(P_).cwiseMax(m_ > 0 ? col_inf_norms(A_) : Vec::Zero(n_));
            const Vec d = limit_scaling(col);
            const Vec e = m_ > 0 ? limit_scaling(row_inf_norms(A_)) : Vec();
            P_ = d.asDiagonal() * P_ * d.asDiagonal();
            if (m_ > 0) A_ = e.asDiagonal() * A_ * d.asDiagonal();
            q_ = q_.cwiseProduct(d);
            D_ = D_.cwiseProduct(d);
            if (m_ > 0) E_ = E_.cwiseProduct(e);

            const Vec pcols = col_inf_norms(P_);
            const double mean_p = n_ > 0 ? pcols.mean() : 0.0;
            double gamma = std::max(mean_p, inf_norm(q_));
            gamma = gamma < kMinScaling ? 1.0 : 1.0 / std::min(gamma, kMaxScaling);
            P_ *= gamma;
            q_ *= gamma;
            cost_scale_ *= gamma;
        }
    }
    P_.makeCompressed();
    A_.makeCompressed();
    At_ = A_.transpose();
    l_ = qp_.l.cwiseProduct(E_);
    u_ = qp_.u.cwiseProduct(E_);
    is_equality_.assign(static_cast<std::size_t>(m_), false);
    for (Eigen::Index i = 0; i < m_; ++i) is_equality_[static_cast<std::size_t>(i)] = qp_.l(i) == qp_.u(i);
}

void AdmmSolver::update_rho_vector() {
    rho_vec_.resize(m_);
    for (Eigen::Index i = 0; i < m_; ++i) {
        if (!std::isfinite(qp_.l(i)) && !std::isfinite(qp_.u(i))) {
            rho_vec_(i) = kRhoMin;
        } else if (is_equality_[static_cast<std::size_t>(i)]) {
            rho_vec_(i) = kEqualityRhoFactor * rho_;
        } else {
            rho_vec_(i) = rho_;
        }
    }
}

bool AdmmSolver::factorize() {
    SparseMatrix K = P_;
    if (m_ > 0) K += SparseMatrix(At_ * rho_vec_.asDiagonal() * A_);
    SparseMatrix eye(n_, n_);
    eye.setIdentity();
    K += s_.sigma * eye;
    K.makeCompressed();
    if (!pattern_ready_) {
        ldlt_.analyzePattern(K);
        pattern_ready_ = true;
    }
    ldlt_.factorize(K);
    return ldlt_.info() == Eigen::Success;
}

void AdmmSolver::unscaled_residuals(const Vec& x, const Vec& z, const Vec& y, double& prim, double& dual) const {
    prim = m_ > 0 ? inf_norm((A_ * x - z).cwiseQuotient(E_)) : 0.0;
    Vec stat = P_ * x + q_;
    if (m_ > 0) stat += At_ * y;
    dual = inf_norm(stat.cwiseQuotient(D_)) / cost_scale_;
}

bool AdmmSolver::primal_infeasible(const Vec& dy_scaled) const {
    if (m_ == 0) return false;
    // Project onto the polar of the recession cone of [l, u]: a component pushing
    // against an infinite bound carries no information and is dropped.
    Vec dy_proj = dy_scaled;
    for (Eigen::Index i = 0; i < m_; ++i) {
        const bool lo = std::isfinite(qp_.l(i));
        const bool hi = std::isfinite(qp_.u(i));
        if (!hi) dy_proj(i) = lo ? std::min(dy_proj(i), 0.0) : 0.0;
        else if (!lo) dy_proj(i) = std::max(dy_proj(i), 0.0);
    }
    const Vec dy = dy_proj.cwiseProduct(E_);
    const double norm = inf_norm(dy);
    if (norm < 1e-12) return false;
    const double eps = s_.infeasibility_tol;
    const Vec atdy = (At_ * dy_proj).cwiseQuotient(D_);
    if (inf_norm(atdy) > eps * norm) return false;
    double support = 0.0;
    for (Eigen::Index i = 0; i < m_; ++i) {
        if (dy(i) > 0.0) support += qp_.u(i) * dy(i);
        else if (dy(i) < 0.0) support += qp_.l(i) * dy(i);
    }
    return support < -eps * norm;
}

bool AdmmSolver::dual_infeasible(const Vec& dx_scaled) const {
    const Vec dx = dx_scaled.cwiseProduct(D_);
    const double norm = inf_norm(dx);
    if (norm < 1e-12) return false;
    const double eps = s_.infeasibility_tol;
    const Vec pdx = (P_ * dx_scaled).cwiseQuotient(D_) / cost_scale_;
    if (inf_norm(pdx) > eps * norm) return false;
    if (q_.dot(dx_scaled) / cost_scale_ >= -eps * norm) return false;
    if (m_ > 0) {
        const Vec adx = (A_ * dx_scaled).cwiseQuotient(E_);
        for (Eigen::Index i = 0; i < m_; ++i) {
            const bool lo = std::isfinite(qp_.l(i));
            const bool hi = std::isfinite(qp_.u(i));
            if (hi && adx(i) > eps * norm) return false;
            if (lo && adx(i) < -eps * norm) return false;
        }
    }
    return true;
}

void AdmmSolver::finish(Solution& out, const Vec& xs, const Vec& ys) const {
    out.x = xs.cwiseProduct(D_);
    out.y = m_ > 0 ? Vec(ys.cwiseProduct(E_) / cost_scale_) : Vec();
    out.objective = qp_.objective(out.x);
}

// Solves the equality-constrained QP on a guessed active set and accepts the
// result only if it is primal feasible, stationary and has correctly signed
// multipliers. Rows whose multiplier points at a bound start active; with
// proximity > 0, rows within that scaled distance of a bound do too, which
// catches degenerate constraints with vanishing multipliers. A wrong guess is
// corrected a few times by adding violated rows and dropping wrongly signed ones.
bool AdmmSolver::polish(Solution& out, double proximity) const {
    // out.x / out.y hold the scaled ADMM iterate on entry.
    const Vec xs = out.x;
    const Vec ys = out.y;
    const Vec zs = m_ > 0 ? Vec(A_ * xs) : Vec();
    std::vector<int> side(static_cast<std::size_t>(m_), 2);  // -1 lower, +1 upper, 0 equality, 2 inactive
    for (Eigen::Index i = 0; i < m_; ++i) {
        auto& sd = side[static_cast<std::size_t>(i)];
        if (is_equality_[static_cast<std::size_t>(i)]) {
            sd = 0;
        } else if (std::isfinite(l_(i)) && zs(i) - l_(i) < std::max(-ys(i), proximity)) {
            sd = -1;
        } else if (std::isfinite(u_(i)) && u_(i) - zs(i) < std::max(ys(i), proximity)) {
            sd = 1;
        }
    }

    for (int round = 0; round <= kPolishCorrections; ++round) {
        std::vector<Eigen::Index> active;
        for (Eigen::Index i = 0; i < m_; ++i)
            if (side[static_cast<std::size_t>(i)] != 2) active.push_back(i);
        const Eigen::Index na = static_cast<Eigen::Index>(active.size());
        const Eigen::Index dim = n_ + na;

        // [P  A_act'] [x]   [-q   ]
        // [A_act   0] [y] = [b_act]
        // factored with +dI / -dI regularization. The first solve is anchored at the
        // ADMM iterate so directions the active set leaves free stay where ADMM put
        // them; refinement then removes the regularization bias.
        std::vector<Triplet> reg, exact;
        for (int k = 0; k < P_.outerSize(); ++k)
            for (SparseMatrix::InnerIterator it(P_, k); it; ++it) exact.emplace_back(it.row(), it.col(), it.value());
        std::vector<Eigen::Index> row_of(static_cast<std::size_t>(m_), -1);
        for (Eigen::Index a = 0; a < na; ++a) row_of[static_cast<std::size_t>(active[static_cast<std::size_t>(a)])] = a;
        for (int k = 0; k < A_.outerSize(); ++k) {
            for (SparseMatrix::InnerIterator it(A_, k); it; ++it) {
                const Eigen::Index a = row_of[static_cast<std::size_t>(it.row())];
                if (a < 0) continue;
                exact.emplace_back(n_ + a, it.col(), it.value());
                exact.emplace_back(it.col(), n_ + a, it.value());
            }
        }
        reg = exact;
        for (Eigen::Index j = 0; j < n_; ++j) reg.emplace_back(j, j, kPolishDelta);
        for (Eigen::Index a = 0; a < na; ++a) reg.emplace_back(n_ + a, n_ + a, -kPolishDelta);
        const SparseMatrix K = make_sparse(dim, dim, reg);
        const SparseMatrix K0 = make_sparse(dim, dim, exact);
        Eigen::SimplicialLDLT<SparseMatrix> kkt(K);
        if (kkt.info() != Eigen::Success) return false;

        Vec rhs(dim);
        rhs.head(n_) = -q_;
        for (Eigen::Index a = 0; a < na; ++a) {
            const Eigen::Index i = active[static_cast<std::size_t>(a)];
            rhs(n_ + a) = side[static_cast<std::size_t>(i)] > 0 ? u_(i) : l_(i);
        }
        Vec anchored = rhs;
        anchored.head(n_) += kPolishDelta * xs;
        for (Eigen::Index a = 0; a < na; ++a) anchored(n_ + a) -= kPolishDelta * ys(active[static_cast<std::size_t>(a)]);
        Vec sol = kkt.solve(anchored);
        for (int r = 0; r < kPolishRefinement; ++r) sol += kkt.solve(Vec(rhs - K0 * sol));
        if (!sol.allFinite()) return false;

        const Vec xp = sol.head(n_);
        Vec yp = Vec::Zero(m_);
        for (Eigen::Index a = 0; a < na; ++a) yp(active[static_cast<std::size_t>(a)]) = sol(n_ + a);

        // Residuals on the original scale.
        double prim = 0.0;
        bool changed = false;
        const Vec ax = m_ > 0 ? Vec(A_ * xp) : Vec();
        for (Eigen::Index i = 0; i < m_; ++i) {
            const double below = (l_(i) - ax(i)) / E_(i);
            const double above = (ax(i) - u_(i)) / E_(i);
            prim = std::max({prim, below, above});
            auto& sd = side[static_cast<std::size_t>(i)];
            if (sd == 2 && below > s_.tol) sd = -1, changed = true;
            else if (sd == 2 && above > s_.tol) sd = 1, changed = true;
        }
        Vec stat = P_ * xp + q_;
        if (m_ > 0) stat += At_ * yp;
        const double dual = inf_norm(stat.cwiseQuotient(D_)) / cost_scale_;
        double sign = 0.0;
        for (Eigen::Index i : active) {
            const double yv = yp(i) * E_(i) / cost_scale_;
            auto& sd = side[static_cast<std::size_t>(i)];
            const double wrong = sd < 0 ? yv : (sd > 0 ? -yv : 0.0);
            sign = std::max(sign, wrong);
            if (wrong > s_.tol) sd = 2, changed = true;
        }
        if (prim <= s_.tol && dual <= s_.tol && sign <= s_.tol) {
            finish(out, xp, yp);
            out.polished = true;
            return true;
        }
        if (!changed) return false;
    }
    return false;
}

Solution AdmmSolver::run() {
    const auto t0 = std::chrono::steady_clock::now();
    Solution out;
    out.status = SolveStatus::max_iter;

    scale_problem();
    rho_ = s_.rho;
    update_rho_vector();
    if (!factorize()) {
        out.x = Vec::Zero(n_);
        out.y = Vec::Zero(m_);
        out.status = SolveStatus::max_iter;
        return out;
    }

    Vec x = Vec::Zero(n_);
    Vec z = Vec::Zero(m_);
    Vec y = Vec::Zero(m_);
    Vec x_prev = x;
    Vec y_prev = y;
    // Certificates use the change over a whole check interval, which averages
    // out the oscillation of single steps on nearly infeasible problems.
    Vec x_check = x;
    Vec y_check = y;
    Vec rhs(n_);
    const double alpha = s_.alpha;
    int next_polish = 100;

    auto try_polish = [&](Solution& candidate, double prim_scaled) {
        for (const double proximity : {0.0, std::max(1e-9, 10.0 * prim_scaled)}) {
            candidate.x = x;
            candidate.y = y;
            if (polish(candidate, proximity)) return true;
        }
        return false;
    };

    int iter = 0;
    for (iter = 1; iter <= s_.max_iter; ++iter) {
        x_prev = x;
        y_prev = y;
        rhs = s_.sigma * x - q_;
        if (m_ > 0) rhs += At_ * (rho_vec_.cwiseProduct(z) - y);
        const Vec x_tilde = ldlt_.solve(rhs);
        x = alpha * x_tilde + (1.0 - alpha) * x_prev;
        if (m_ > 0) {
            const Vec z_relaxed = alpha * (A_ * x_tilde) + (1.0 - alpha) * z;
            const Vec z_new = (z_relaxed + y.cwiseQuotient(rho_vec_)).cwiseMax(l_).cwiseMin(u_);
            y += rho_vec_.cwiseProduct(z_relaxed - z_new);
            z = z_new;
        }

        if (iter % s_.check_interval != 0 && iter != s_.max_iter) continue;

        double prim = 0.0;
        double dual = 0.0;
        unscaled_residuals(x, z, y, prim, dual);
        if (!std::isfinite(prim) || !std::isfinite(dual)) break;

        if (prim <= s_.tol && dual <= s_.tol) {
            out.status = SolveStatus::optimal;
            Solution candidate;
            if (s_.polish && try_polish(candidate, inf_norm(A_ * x - z))) {
                candidate.status = SolveStatus::optimal;
                out = std::move(candidate);
            } else {
                finish(out, x, y);
            }
            break;
        }
        if (s_.polish && iter >= next_polish && std::max(prim, dual) <= 1e-2) {
            Solution candidate;
            if (try_polish(candidate, inf_norm(A_ * x - z))) {
                candidate.status = SolveStatus::optimal;
                out = std::move(candidate);
                break;
            }
            next_polish = 2 * iter;
        }
        const bool infeasible = primal_infeasible(y - y_prev) || primal_infeasible(y - y_check);
        const bool unbounded = !infeasible && (dual_infeasible(x - x_prev) || dual_infeasible(x - x_check));
        x_check = x;
        y_check = y;
        if (infeasible) {
            out.status = SolveStatus::infeasible;
            break;
        }
        if (unbounded) {
            out.status = SolveStatus::unbounded;
            break;
        }
        if (s_.adaptive_rho && m_ > 0) {
            const Vec ax = A_ * x;
            const double prim_scale = std::max(inf_norm(ax), inf_norm(z));
            Vec aty = At_ * y;
            const double dual_scale = std::max({inf_norm(P_ * x), inf_norm(aty), inf_norm(q_)});
            const double prim_s = inf_norm(ax - z) / std::max(prim_scale, 1.0);
            const double dual_s = inf_norm(P_ * x + q_ + aty) / std::max(dual_scale, 1.0);
            const double ratio = prim_s / std::max(dual_s, 1e-30);
            // Rebalancing toward a residual that has already converged only slows the other one.
            if ((ratio > 10.0 && prim > s_.tol) || (ratio < 0.1 && dual > s_.tol)) {
                const double new_rho = std::clamp(rho_ * std::sqrt(ratio), kRhoMin, kRhoMax);
                if (new_rho != rho_) {
                    rho_ = new_rho;
                    update_rho_vector();
                    if (!factorize()) break;
                }
            }
        }
    }
    out.iterations = std::min(iter, s_.max_iter);
    if (out.x.size() != n_) finish(out, x, y);
    if (out.status == SolveStatus::infeasible || out.status == SolveStatus::unbounded) {
        out.objective = out.status == SolveStatus::infeasible ? kInf : -kInf;
    }
    out.solve_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

}  // namespace

Solution solve_qp(const QuadraticProgram& qp, const QpSettings& settings) {
    if (settings.validate) qp.validate();
    AdmmSolver solver(qp, settings);
    return solver.run();
}

}  // namespace bess::opt
