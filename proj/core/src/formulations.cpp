#include <algorithm>
#include <cmath>

#include "bess/formulations.hpp"
#include "skeleton.hpp"

namespace bess {

std::string to_string(UseCaseKind kind) {
    return kind == UseCaseKind::pv_smoothing ? "pv_smoothing" : "revenue_max";
}

UseCaseKind parse_use_case(const std::string& text) {
    if (text == "pv_smoothing" || text == "smoothing") return UseCaseKind::pv_smoothing;
    if (text == "revenue_max" || text == "revenue") return UseCaseKind::revenue_max;
    throw DomainError("unknown use case '" + text + "'");
}

void UseCase::validate(const BatteryParams& params) const {
    params.validate();
    if (horizon == 0) throw DomainError("horizon must be positive");
    const std::size_t need = kind == UseCaseKind::pv_smoothing ? horizon + 1 : horizon;
    if (data.size() < need) {
        throw DomainError(to_string(kind) + " needs " + std::to_string(need) + " data points, got " +
                          std::to_string(data.size()));
    }
    for (std::size_t k = 0; k < need; ++k)
        if (!std::isfinite(data[k])) throw DomainError("non-finite data at index " + std::to_string(k));
    if (e0 < params.e_min_frac || e0 > params.e_max_frac) throw DomainError("initial SoC outside bounds");
}

double default_lambda(UseCaseKind kind) { return kind == UseCaseKind::pv_smoothing ? 1.6e-3 : 4.3e-3; }

double usecase_objective(const UseCase& uc, const BatteryParams& params, std::span<const double> p_c,
                         std::span<const double> p_d) {
    const std::size_t K = uc.horizon;
    double total = 0.0;
    if (uc.kind == UseCaseKind::revenue_max) {
        for (std::size_t k = 0; k < K; ++k) total -= uc.data[k] * params.dt_hours * params.p_max_kw * (p_d[k] - p_c[k]);
        return total;
    }
    auto net = [&](std::size_t k) {
        const double battery = k < K ? p_d[k] - p_c[k] : 0.0;
        return uc.data[k] / params.p_max_kw + battery;
    };
    for (std::size_t k = 0; k < K; ++k) total += std::pow(net(k + 1) - net(k), 2);
    return total;
}

double usecase_metric(const UseCase& uc, const BatteryParams& params, const DispatchSchedule& schedule) {
    if (uc.kind == UseCaseKind::revenue_max) {
        return revenue(schedule, std::span<const double>(uc.data).first(uc.horizon), params);
    }
    const std::span<const double> pv = std::span<const double>(uc.data).first(uc.horizon + 1);
    const std::vector<double> net = net_pv_power(schedule, pv, params);
    return smoothing_mse(net, pv);
}

namespace detail {

Skeleton add_power_blocks(VariableLayout& layout, int K) {
    Skeleton s;
    s.K = K;
    s.pc = layout.add("p_c", K);
    s.pd = layout.add("p_d", K);
    s.e = layout.add("e", K + 1);
    return s;
}

void add_box_rows(QpAssembler& qp, const Skeleton& s, const UseCase& uc, const BatteryParams& params, bool cut) {
    qp.bound(s.e, uc.e0, uc.e0);
    for (int k = 1; k <= s.K; ++k) qp.bound(s.e + k, params.e_min_frac, params.e_max_frac);
    for (int k = 0; k < s.K; ++k) qp.bound(s.pc + k, 0.0, 1.0);
    for (int k = 0; k < s.K; ++k) qp.bound(s.pd + k, 0.0, 1.0);
    if (cut) {
        for (int k = 0; k < s.K; ++k) qp.row({{s.pc + k, 1.0}, {s.pd + k, 1.0}}, -opt::kInf, 1.0);
    }
}

void add_dynamics(QpAssembler& qp, const Skeleton& s, const BatteryParams& params,
                  const std::function<std::vector<Term>(int k)>& energy_terms) {
    const double gain = params.soc_gain();
    for (int k = 0; k < s.K; ++k) {
        std::vector<Term> terms{{s.e + k + 1, 1.0}, {s.e + k, -1.0}};
        for (const auto& [j, v] : energy_terms(k)) terms.emplace_back(j, -gain * v);
        qp.row(terms, 0.0, 0.0);
    }
}

void add_objective(QpAssembler& qp, const Skeleton& s, const UseCase& uc, const BatteryParams& params) {
    if (uc.kind == UseCaseKind::revenue_max) {
        for (int k = 0; k < s.K; ++k) {
            const double w = uc.data[static_cast<std::size_t>(k)] * params.dt_hours * params.p_max_kw;
            qp.linear(s.pc + k, w);
            qp.linear(s.pd + k, -w);
        }
        return;
    }
    // (net[k+1] - net[k])^2 with the battery idle at k = K.
    for (int k = 0; k < s.K; ++k) {
        const auto ku = static_cast<std::size_t>(k);
        const double offset = (uc.data[ku + 1] - uc.data[ku]) / params.p_max_kw;
        std::vector<Term> terms{{s.pc + k, 1.0}, {s.pd + k, -1.0}};
        if (k + 1 < s.K) {
            terms.emplace_back(s.pc + k + 1, -1.0);
            terms.emplace_back(s.pd + k + 1, 1.0);
        }
        qp.square(terms, offset);
    }
}

}  // namespace detail

BuiltQp build_linear(const UseCase& uc, const BatteryParams& params, double eta_c, double eta_d) {
    uc.validate(params);
    if (!(eta_c > 0.0 && eta_c <= 1.0) || !(eta_d > 0.0 && eta_d <= 1.0)) {
        throw DomainError("constant efficiencies must lie in (0, 1]");
    }
    BuiltQp out;
    const auto s = detail::add_power_blocks(out.layout, static_cast<int>(uc.horizon));
    detail::QpAssembler qp(out.layout.size());
    detail::add_box_rows(qp, s, uc, params, true);
    detail::add_dynamics(qp, s, params, [&](int k) {
        return std::vector<detail::Term>{{s.pc + k, eta_c}, {s.pd + k, -1.0 / eta_d}};
    });
    detail::add_objective(qp, s, uc, params);
    out.qp = qp.finish(out.layout.labels());
    return out;
}

opt::NlpProblem build_nlp(const UseCase& uc, const BatteryParams& params, double rho_bound, double rho_comp) {
    uc.validate(params);
    opt::NlpProblem nlp;
    nlp.objective = [uc, params](std::span<const double> p_c, std::span<const double> p_d) {
        return usecase_objective(uc, params, p_c, p_d);
    };
    nlp.horizon = uc.horizon;
    nlp.params = params;
    nlp.e0 = uc.e0;
    nlp.rho_bound = rho_bound;
    nlp.rho_comp = rho_comp;
    nlp.validate();
    return nlp;
}

DispatchResult two_stage_linear_solve(const UseCase& uc, const BatteryParams& params, double alpha,
                                      const opt::QpSettings& settings, double eta_c, double eta_d,
                                      DispatchResult* stage1) {
    if (!(alpha >= 0.0)) throw DomainError("alpha must be nonnegative");
    BuiltQp built = build_linear(uc, params, eta_c, eta_d);
    const opt::Solution first = opt::solve_qp(built.qp, settings);
    DispatchResult first_result = extract_result(first, built.layout, uc, params);
    if (stage1) *stage1 = first_result;
    if (first.status != opt::SolveStatus::optimal) return first_result;

    // Power bound rows follow the K + 1 SoC rows: p_c at K+1.., p_d at 2K+1..
    const int K = static_cast<int>(uc.horizon);
    const auto& pc = first_result.schedule.p_c;
    const auto& pd = first_result.schedule.p_d;
    for (int k = 0; k < K; ++k) {
        const double net = pc[static_cast<std::size_t>(k)] - pd[static_cast<std::size_t>(k)];
        if (net >= alpha) built.qp.u(2 * K + 1 + k) = 0.0;
        if (net <= -alpha) built.qp.u(K + 1 + k) = 0.0;
    }
    const opt::Solution second = opt::solve_qp(built.qp, settings);
    if (second.status != opt::SolveStatus::optimal) {
        first_result.degraded = true;
        first_result.solve_time_s += second.solve_time_s;
        return first_result;
    }
    DispatchResult out = extract_result(second, built.layout, uc, params);
    out.solve_time_s += first.solve_time_s;
    out.iterations += first.iterations;
    return out;
}

}  // namespace bess
