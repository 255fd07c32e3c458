#pragma once

// Energy reservoir model: part-load efficiency curves, discrete SoC dynamics,
// the saturating "actual" plant, and the two use-case metrics.
//
// Optimization-facing powers are per-unit of the power rating; kW only show
// up in SoC arithmetic and in the metrics.

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace bess {

/// Raised when an argument lies outside the domain of an operation.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

struct BatteryParams {
    double p_max_kw{50.0};        // power rating
    double capacity_kwh{135.0};   // energy capacity
    double e_max_frac{0.9};
    double e_min_frac{0.1};
    double eta_c_max{0.92};
    double eta_d_max{0.95};
    double dt_hours{1.0 / 12.0};  // 5-minute steps
    double knee{0.1};             // efficiency-curve knee, per-unit power

    /// Throws DomainError if any invariant is broken.
    void validate() const;

    /// SoC change (fraction of capacity) per one per-unit energy term held for one step.
    [[nodiscard]] double soc_gain() const noexcept { return dt_hours * p_max_kw / capacity_kwh; }
};

/// Scheduled per-unit charge and discharge powers over a horizon of K steps.
struct DispatchSchedule {
    std::vector<double> p_c;
    std::vector<double> p_d;

    DispatchSchedule() = default;
    DispatchSchedule(std::vector<double> charge, std::vector<double> discharge);

    static DispatchSchedule zeros(std::size_t horizon);

    [[nodiscard]] std::size_t horizon() const noexcept { return p_c.size(); }
    void validate() const;
};

/// SoC trajectory (K+1 points) and the powers the plant actually delivered.
struct Trajectory {
    std::vector<double> e;
    std::vector<double> realized_p_c;
    std::vector<double> realized_p_d;

    [[nodiscard]] DispatchSchedule realized() const { return {realized_p_c, realized_p_d}; }
};

// Part-load efficiency: eta(p) = eta_max * (1 - exp(-p / knee)).
double charge_efficiency(double p, const BatteryParams& params);
double discharge_efficiency(double p, const BatteryParams& params);

/// DC-side energy term for charging, eta_c(p) * p, in per-unit.
double charge_energy(double p, const BatteryParams& params);

/// Energy drawn per unit of discharge, p / eta_d(p); exactly 0 at p == 0.
double discharge_energy(double p, const BatteryParams& params);

/// One step of the discretized SoC equation. No clamping.
double soc_step(double e, double p_c, double p_d, const BatteryParams& params);

/// Repeated soc_step without saturation; returns K+1 SoC values.
std::vector<double> soc_trajectory(const DispatchSchedule& schedule, double e0, const BatteryParams& params);

/// SoC overshoot (fraction of capacity) the plant tolerates before cutting power;
/// results within the band are clamped onto the bound.
inline constexpr double kPlantSocTolerance = 1e-6;

/// Applies a schedule to the plant. A step whose result would leave
/// [e_min_frac, e_max_frac] has its offending power zeroed for that step.
Trajectory simulate_plant(const DispatchSchedule& schedule, double e0, const BatteryParams& params);

/// Net PV power at the point of common coupling, kW, K+1 points.
/// The battery is idle at the final point (index K).
std::vector<double> net_pv_power(const DispatchSchedule& schedule, std::span<const double> pv_kw,
                                 const BatteryParams& params);

/// Sum of squared consecutive differences.
double ramp_objective(std::span<const double> net_power);

/// Mean of (net[k] - mean(pv))^2.
double smoothing_mse(std::span<const double> net_power, std::span<const double> pv_power);

/// Sum of LMP[k] * (P_d - P_c) * dt with powers in kW; dollars when LMP is $/kWh.
double revenue(const DispatchSchedule& schedule, std::span<const double> lmp, const BatteryParams& params);

}  // namespace bess
