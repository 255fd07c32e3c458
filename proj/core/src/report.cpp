#include "bess/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace bess {

namespace {

using nlohmann::ordered_json;

std::string cell(double v) {
    if (!std::isfinite(v)) return "";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

ordered_json number(double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr); }

ordered_json meta_json(const ScenarioMeta& m) {
    const BatteryParams& b = m.battery;
    return ordered_json{
        {"use_case", to_string(m.use_case)},
        {"data_source", m.data_source},
        {"seed", m.seed},
        {"steps", m.steps},
        {"dt_hours", m.dt_hours},
        {"e0", m.e0},
        {"lambda", m.lambda},
        {"big_m", m.big_m},
        {"alpha", m.alpha},
        {"battery",
         {{"p_max_kw", b.p_max_kw},
          {"capacity_kwh", b.capacity_kwh},
          {"e_max_frac", b.e_max_frac},
          {"e_min_frac", b.e_min_frac},
          {"eta_c_max", b.eta_c_max},
          {"eta_d_max", b.eta_d_max},
          {"knee", b.knee}}},
        {"surrogates",
         {{"widths", m.widths}, {"charge_rmse", number(m.charge_rmse)}, {"discharge_rmse", number(m.discharge_rmse)}}},
    };
}

std::string dump(const ordered_json& j) { return j.dump(2) + "\n"; }

}  // namespace

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");
    out << text;
    if (!out) throw std::runtime_error(path.string() + ": write failed");
}

std::string report_csv(const ExperimentReport& report) {
    std::ostringstream out;
    out << "method,solver_time_s,predicted,actual,gap,status\n";
    for (const auto& r : report.rows) {
        out << to_string(r.method) << ',' << cell(r.solver_time_s) << ',' << cell(r.predicted) << ','
            << cell(r.actual) << ',' << cell(r.feasibility_gap) << ',' << r.status << '\n';
    }
    return out.str();
}

std::string report_json(const ExperimentReport& report) {
    ordered_json rows = ordered_json::array();
    for (const auto& r : report.rows) {
        ordered_json row{
            {"method", to_string(r.method)},
            {"status", r.status},
            {"predicted", number(r.predicted)},
            {"actual", number(r.actual)},
            {"feasibility_gap", number(r.feasibility_gap)},
            {"objective", number(r.objective)},
            {"iterations", r.iterations},
            {"node_count", r.node_count},
            {"mip_gap", number(r.mip_gap)},
            {"saturated", r.saturated},
            {"degraded", r.degraded},
        };
        if (!r.error.empty()) row["error"] = r.error;
        if (!r.warning.empty()) row["warning"] = r.warning;
        row["schedule"] = {{"p_c", r.schedule.p_c},
                           {"p_d", r.schedule.p_d},
                           {"soc_predicted", r.predicted_soc},
                           {"soc_actual", r.actual_soc}};
        rows.push_back(std::move(row));
    }
    const std::string units = report.meta.use_case == UseCaseKind::pv_smoothing ? "mse_kw2" : "revenue_usd";
    return dump(ordered_json{{"scenario", meta_json(report.meta)}, {"metric", units}, {"rows", rows}});
}

std::string timing_json(const ExperimentReport& report) {
    ordered_json rows = ordered_json::array();
    for (const auto& r : report.rows) rows.push_back({{"method", to_string(r.method)}, {"solver_time_s", r.solver_time_s}});
    return dump(ordered_json{{"rows", rows}});
}

std::string schedules_csv(const ExperimentReport& report) {
    std::ostringstream out;
    out << "method,step,p_c,p_d,soc_predicted,soc_actual\n";
    for (const auto& r : report.rows) {
        const std::size_t points = r.actual_soc.size();
        for (std::size_t k = 0; k < points; ++k) {
            const bool has_power = k < r.schedule.horizon();
            out << to_string(r.method) << ',' << k << ',' << (has_power ? cell(r.schedule.p_c[k]) : "") << ','
                << (has_power ? cell(r.schedule.p_d[k]) : "") << ','
                << (k < r.predicted_soc.size() ? cell(r.predicted_soc[k]) : "") << ',' << cell(r.actual_soc[k])
                << '\n';
        }
    }
    return out.str();
}

void write_experiment_report(const std::filesystem::path& dir, const ExperimentReport& report) {
    std::filesystem::create_directories(dir);
    write_text_file(dir / "report.csv", report_csv(report));
    write_text_file(dir / "report.json", report_json(report));
    write_text_file(dir / "timing.json", timing_json(report));
    write_text_file(dir / "schedules.csv", schedules_csv(report));
}

std::string sweep_csv(const SweepReport& report) {
    std::ostringstream out;
    out << "lambda,solver_time_s,predicted,actual,gap,status\n";
    for (const auto& p : report.points) {
        out << cell(p.lambda) << ',' << cell(p.solver_time_s) << ',' << cell(p.predicted) << ',' << cell(p.actual)
            << ',' << cell(p.feasibility_gap) << ',' << p.status << '\n';
    }
    return out.str();
}

std::string sweep_json(const SweepReport& report) {
    ordered_json points = ordered_json::array();
    for (const auto& p : report.points) {
        points.push_back({{"lambda", p.lambda},
                          {"status", p.status},
                          {"predicted", number(p.predicted)},
                          {"actual", number(p.actual)},
                          {"feasibility_gap", number(p.feasibility_gap)}});
    }
    ordered_json meta = meta_json(report.meta);
    meta.erase("lambda");
    return dump(ordered_json{{"scenario", meta}, {"points", points}});
}

void write_sweep_report(const std::filesystem::path& dir, const SweepReport& report) {
    std::filesystem::create_directories(dir);
    write_text_file(dir / "sweep.csv", sweep_csv(report));
    write_text_file(dir / "sweep.json", sweep_json(report));
    ordered_json rows = ordered_json::array();
    for (const auto& p : report.points) rows.push_back({{"lambda", p.lambda}, {"solver_time_s", p.solver_time_s}});
    write_text_file(dir / "sweep_timing.json", dump(ordered_json{{"points", rows}}));
}

}  // namespace bess
