#include "bess/erm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace bess {

namespace {

void require_unit_interval(double p, const char* what) {
    if (!(p >= 0.0 && p <= 1.0)) {
        throw DomainError(std::string(what) + " must lie in [0, 1], got " + std::to_string(p));
    }
}

double part_load_efficiency(double p, double eta_max, double knee) {
    return eta_max * -std::expm1(-p / knee);
}

}  // namespace

void BatteryParams::validate() const {
    if (!(p_max_kw > 0.0)) throw DomainError("p_max_kw must be positive");
    if (!(capacity_kwh > 0.0)) throw DomainError("capacity_kwh must be positive");
    if (!(dt_hours > 0.0)) throw DomainError("dt_hours must be positive");
    if (!(knee > 0.0)) throw DomainError("knee must be positive");
    if (!(e_min_frac >= 0.0 && e_min_frac < e_max_frac && e_max_frac <= 1.0)) {
        throw DomainError("SoC bounds must satisfy 0 <= e_min_frac < e_max_frac <= 1");
    }
    if (!(eta_c_max > 0.0 && eta_c_max <= 1.0)) throw DomainError("eta_c_max must lie in (0, 1]");
    if (!(eta_d_max > 0.0 && eta_d_max <= 1.0)) throw DomainError("eta_d_max must lie in (0, 1]");
}

DispatchSchedule::DispatchSchedule(std::vector<double> charge, std::vector<double> discharge)
    : p_c(std::move(charge)), p_d(std::move(discharge)) {}

DispatchSchedule DispatchSchedule::zeros(std::size_t horizon) {
    return {std::vector<double>(horizon, 0.0), std::vector<double>(horizon, 0.0)};
}

void DispatchSchedule::validate() const {
    if (p_c.size() != p_d.size()) throw DomainError("charge and discharge schedules differ in length");
    for (std::size_t k = 0; k < p_c.size(); ++k) {
        require_unit_interval(p_c[k], "p_c");
        require_unit_interval(p_d[k], "p_d");
    }
}

double charge_efficiency(double p, const BatteryParams& params) {
    require_unit_interval(p, "charge power");
    return part_load_efficiency(p, params.eta_c_max, params.knee);
}

double discharge_efficiency(double p, const BatteryParams& params) {
    require_unit_interval(p, "discharge power");
    return part_load_efficiency(p, params.eta_d_max, params.knee);
}

double charge_energy(double p, const BatteryParams& params) {
    return charge_efficiency(p, params) * p;
}

double discharge_energy(double p, const BatteryParams& params) {
    const double eta = discharge_efficiency(p, params);
    return p == 0.0 ? 0.0 : p / eta;
}

double soc_step(double e, double p_c, double p_d, const BatteryParams& params) {
    return e + params.soc_gain() * (charge_energy(p_c, params) - discharge_energy(p_d, params));
}

std::vector<double> soc_trajectory(const DispatchSchedule& schedule, double e0, const BatteryParams& params) {
    schedule.validate();
    std::vector<double> e(schedule.horizon() + 1);
    e[0] = e0;
    for (std::size_t k = 0; k < schedule.horizon(); ++k) {
        e[k + 1] = soc_step(e[k], schedule.p_c[k], schedule.p_d[k], params);
    }
    return e;
}

Trajectory simulate_plant(const DispatchSchedule& schedule, double e0, const BatteryParams& params) {
    params.validate();
    schedule.validate();
    if (!(e0 >= params.e_min_frac && e0 <= params.e_max_frac)) {
        throw DomainError("initial SoC " + std::to_string(e0) + " lies outside the SoC bounds");
    }
    const std::size_t horizon = schedule.horizon();
    Trajectory out;
    out.e.resize(horizon + 1);
    out.realized_p_c.resize(horizon);
    out.realized_p_d.resize(horizon);
    out.e[0] = e0;

    const double upper = params.e_max_frac;
    const double lower = params.e_min_frac;
    for (std::size_t k = 0; k < horizon; ++k) {
        double p_c = schedule.p_c[k];
        double p_d = schedule.p_d[k];
        double next = soc_step(out.e[k], p_c, p_d, params);
        if (next > upper + kPlantSocTolerance && p_c > 0.0) {
            p_c = 0.0;
            next = soc_step(out.e[k], p_c, p_d, params);
        }
        if (next < lower - kPlantSocTolerance && p_d > 0.0) {
            p_d = 0.0;
            next = soc_step(out.e[k], p_c, p_d, params);
            // Dropping the discharge can push a simultaneous charge over the top.
            if (next > upper + kPlantSocTolerance && p_c > 0.0) {
                p_c = 0.0;
                next = out.e[k];
            }
        }
        out.e[k + 1] = std::clamp(next, lower, upper);
        out.realized_p_c[k] = p_c;
        out.realized_p_d[k] = p_d;
    }
    return out;
}

std::vector<double> net_pv_power(const DispatchSchedule& schedule, std::span<const double> pv_kw,
                                 const BatteryParams& params) {
    const std::size_t horizon = schedule.horizon();
    if (pv_kw.size() < horizon + 1) {
        throw DomainError("PV series needs K+1 samples for a horizon of K steps");
    }
    std::vector<double> net(pv_kw.begin(), pv_kw.begin() + static_cast<std::ptrdiff_t>(horizon + 1));
    for (std::size_t k = 0; k < horizon; ++k) {
        net[k] += (schedule.p_d[k] - schedule.p_c[k]) * params.p_max_kw;
    }
    return net;
}

double ramp_objective(std::span<const double> net_power) {
    if (net_power.size() < 2) throw DomainError("ramp objective needs at least two samples");
    double total = 0.0;
    for (std::size_t k = 0; k + 1 < net_power.size(); ++k) {
        const double step = net_power[k + 1] - net_power[k];
        total += step * step;
    }
    return total;
}

double smoothing_mse(std::span<const double> net_power, std::span<const double> pv_power) {
    if (net_power.empty() || pv_power.empty()) throw DomainError("smoothing MSE needs non-empty series");
    const double mean_pv =
        std::accumulate(pv_power.begin(), pv_power.end(), 0.0) / static_cast<double>(pv_power.size());
    double total = 0.0;
    for (double x : net_power) total += (x - mean_pv) * (x - mean_pv);
    return total / static_cast<double>(net_power.size());
}

double revenue(const DispatchSchedule& schedule, std::span<const double> lmp, const BatteryParams& params) {
    if (lmp.size() < schedule.horizon()) throw DomainError("LMP series shorter than the horizon");
    double total = 0.0;
    for (std::size_t k = 0; k < schedule.horizon(); ++k) {
        total += lmp[k] * (schedule.p_d[k] - schedule.p_c[k]) * params.p_max_kw * params.dt_hours;
    }
    return total;
}

}  // namespace bess
