#include <algorithm>
#include <cmath>

#include "bess/formulations.hpp"

namespace bess {

namespace {

double snap(double p) {
    if (std::abs(p) < kPowerSnap) return 0.0;
    return std::clamp(p, 0.0, 1.0);
}

}  // namespace

bool DispatchResult::saturated() const {
    for (std::size_t k = 0; k < schedule.horizon(); ++k) {
        if (actual.realized_p_c[k] != schedule.p_c[k] || actual.realized_p_d[k] != schedule.p_d[k]) return true;
    }
    return false;
}

DispatchResult evaluate_schedule(DispatchSchedule schedule, std::vector<double> predicted_soc, const UseCase& uc,
                                 const BatteryParams& params) {
    DispatchResult out;
    out.schedule = std::move(schedule);
    out.schedule.validate();
    if (out.schedule.horizon() != uc.horizon) throw DomainError("schedule horizon does not match the use case");
    out.predicted_soc = predicted_soc.empty() ? soc_trajectory(out.schedule, uc.e0, params) : std::move(predicted_soc);
    out.actual = simulate_plant(out.schedule, uc.e0, params);
    out.predicted_metric = usecase_metric(uc, params, out.schedule);
    out.actual_metric = usecase_metric(uc, params, out.actual.realized());
    out.objective = usecase_objective(uc, params, out.schedule.p_c, out.schedule.p_d);
    out.status = opt::SolveStatus::optimal;
    return out;
}

DispatchResult extract_result(const opt::Solution& sol, const VariableLayout& layout, const UseCase& uc,
                              const BatteryParams& params, const icnn::Icnn* f_net, const icnn::Icnn* g_net) {
    const bool has_point = sol.x.size() == layout.size() && sol.x.allFinite() &&
                           (sol.status == opt::SolveStatus::optimal || sol.status == opt::SolveStatus::max_iter);
    if (!has_point) {
        DispatchResult out;
        out.status = sol.status;
        out.solve_time_s = sol.solve_time_s;
        out.iterations = sol.iterations;
        out.node_count = sol.node_count;
        return out;
    }
    const int K = static_cast<int>(uc.horizon);
    const auto& pc = layout.block("p_c");
    const auto& pd = layout.block("p_d");
    DispatchSchedule schedule = DispatchSchedule::zeros(uc.horizon);
    for (int k = 0; k < K; ++k) {
        schedule.p_c[static_cast<std::size_t>(k)] = snap(sol.x(pc.offset + k));
        schedule.p_d[static_cast<std::size_t>(k)] = snap(sol.x(pd.offset + k));
    }
    std::vector<double> soc;
    if (layout.has("e")) {
        const auto& e = layout.block("e");
        soc.assign(sol.x.data() + e.offset, sol.x.data() + e.offset + e.size());
    }
    DispatchResult out = evaluate_schedule(std::move(schedule), std::move(soc), uc, params);
    out.objective = sol.objective;
    out.status = sol.status;
    out.solve_time_s = sol.solve_time_s;
    out.iterations = sol.iterations;
    out.node_count = sol.node_count;
    if (sol.node_count > 0) out.mip_gap = sol.gap;
    if (f_net && g_net && (layout.has("z_c1") || layout.has("F_c1"))) {
        out.feasibility_gap = feasibility_gap(sol.x, layout, *f_net, *g_net);
    }
    return out;
}

}  // namespace bess
