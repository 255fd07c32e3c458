#include "bess/nlp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <random>

namespace bess::opt {

void NlpProblem::validate() const {
    params.validate();
    if (!objective) throw DomainError("NLP objective is empty");
    if (horizon == 0) throw DomainError("NLP horizon must be positive");
    if (!(rho_bound > 0.0) || !(rho_comp > 0.0)) throw DomainError("penalty weights must be positive");
    if (e0 < params.e_min_frac || e0 > params.e_max_frac) throw DomainError("initial SoC outside bounds");
}

namespace {

double bound_term(double e, const BatteryParams& p) {
    const double over = std::max(0.0, e - p.e_max_frac);
    const double under = std::max(0.0, p.e_min_frac - e);
    return over * over + under * under;
}

// Penalized objective with per-step energy terms cached so a single-coordinate
// change evaluates the efficiency curves once.
class Penalized {
public:
    explicit Penalized(const NlpProblem& nlp) : nlp_(nlp), K_(nlp.horizon), gain_(nlp.params.soc_gain()) {}

    void load(const std::vector<double>& x) {
        x_ = x;
        delta_.assign(K_, 0.0);
        for (std::size_t k = 0; k < K_; ++k) delta_[k] = step_delta(x_[k], x_[K_ + k]);
    }

    double value() const { return value_with(K_, 0.0); }

    // Value with step `k` SoC delta replaced by `delta` (k == K_ for no change).
    double value_with(std::size_t k, double delta) const {
        double bound = 0.0;
        double e = nlp_.e0;
        for (std::size_t j = 0; j < K_; ++j) {
            e += (j == k) ? delta : delta_[j];
            bound += bound_term(e, nlp_.params);
        }
        double comp = 0.0;
        for (std::size_t j = 0; j < K_; ++j) comp += std::pow(x_[j] * x_[K_ + j], 2);
        const std::span<const double> pc(x_.data(), K_), pd(x_.data() + K_, K_);
        return nlp_.objective(pc, pd) + nlp_.rho_bound * bound + nlp_.rho_comp * comp;
    }

    double step_delta(double pc, double pd) const {
        return gain_ * (charge_energy(pc, nlp_.params) - discharge_energy(pd, nlp_.params));
    }

    // Central difference in coordinate i, one-sided against the box.
    double partial(std::size_t i, double h) {
        const double orig = x_[i];
        const double hi = std::min(1.0, orig + h);
        const double lo = std::max(0.0, orig - h);
        const std::size_t k = i < K_ ? i : i - K_;
        auto eval = [&](double v) {
            x_[i] = v;
            const double d = step_delta(x_[k], x_[K_ + k]);
            return value_with(k, d);
        };
        const double f_hi = eval(hi);
        const double f_lo = eval(lo);
        x_[i] = orig;
        return (f_hi - f_lo) / (hi - lo);
    }

    std::vector<double> gradient(double h) {
        std::vector<double> g(x_.size());
        for (std::size_t i = 0; i < x_.size(); ++i) g[i] = partial(i, h);
        return g;
    }

private:
    const NlpProblem& nlp_;
    std::size_t K_;
    double gain_;
    std::vector<double> x_;
    std::vector<double> delta_;
};

struct LocalResult {
    std::vector<double> x;
    double value;
    int iterations;
};

LocalResult descend(const NlpProblem& nlp, std::vector<double> x, const NlpSettings& s) {
    Penalized f(nlp);
    f.load(x);
    double fx = f.value();
    double step = 1.0;
    int it = 0;
    std::vector<double> trial(x.size());
    for (; it < s.max_iter && std::isfinite(fx); ++it) {
        const std::vector<double> g = f.gradient(s.fd_step);
        bool accepted = false;
        double moved = 0.0;
        double f_trial = fx;
        for (int bt = 0; bt < 60; ++bt) {
            double decrease = 0.0;
            moved = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i) {
                trial[i] = std::clamp(x[i] - step * g[i], 0.0, 1.0);
                decrease += g[i] * (trial[i] - x[i]);
                moved = std::max(moved, std::abs(trial[i] - x[i]));
            }
            if (moved <= s.step_tol) break;
            f.load(trial);
            f_trial = f.value();
            if (std::isfinite(f_trial) && f_trial <= fx + s.armijo * decrease) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            f.load(x);
            break;
        }
        x = trial;
        fx = f_trial;
        step = std::min(step * 2.0, 1e6);
    }
    return {std::move(x), fx, it};
}

}  // namespace

double NlpProblem::penalized(std::span<const double> p_c, std::span<const double> p_d) const {
    double e = e0, bound = 0.0, comp = 0.0;
    for (std::size_t k = 0; k < horizon; ++k) {
        e += params.soc_gain() * (charge_energy(p_c[k], params) - discharge_energy(p_d[k], params));
        bound += bound_term(e, params);
        comp += std::pow(p_c[k] * p_d[k], 2);
    }
    return objective(p_c, p_d) + rho_bound * bound + rho_comp * comp;
}

NlpResult solve_nlp_multistart(const NlpProblem& nlp, const NlpSettings& settings) {
    nlp.validate();
    if (settings.n_starts < 0) throw DomainError("n_starts must be nonnegative");
    const auto t0 = std::chrono::steady_clock::now();
    const std::size_t K = nlp.horizon;

    std::mt19937_64 rng(settings.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<std::vector<double>> starts;
    starts.emplace_back(2 * K, 0.0);
    for (int s = 0; s < settings.n_starts; ++s) {
        std::vector<double> x(2 * K);
        for (double& v : x) v = unit(rng);
        starts.push_back(std::move(x));
    }

    NlpResult out;
    std::vector<double> best;
    double best_value = std::numeric_limits<double>::infinity();
    for (const auto& start : starts) {
        LocalResult r = descend(nlp, start, settings);
        out.iterations += r.iterations;
        out.start_penalized.push_back(r.value);
        if (std::isfinite(r.value) && r.value < best_value) {
            best_value = r.value;
            best = std::move(r.x);
        }
    }
    if (best.empty()) throw SolverError("every NLP start produced a non-finite objective");

    out.schedule = DispatchSchedule(std::vector<double>(best.begin(), best.begin() + static_cast<long>(K)),
                                    std::vector<double>(best.begin() + static_cast<long>(K), best.end()));
    const std::span<const double> pc(out.schedule.p_c), pd(out.schedule.p_d);
    out.objective = nlp.objective(pc, pd);
    out.penalized = best_value;
    double e = nlp.e0;
    for (std::size_t k = 0; k < K; ++k) {
        e = soc_step(e, pc[k], pd[k], nlp.params);
        out.bound_violation += bound_term(e, nlp.params);
        out.comp_violation += std::pow(pc[k] * pd[k], 2);
    }
    out.solve_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

}  // namespace bess::opt
