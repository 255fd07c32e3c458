#include "bess/experiment.hpp"

#include <chrono>
#include <cmath>
#include <exception>
#include <limits>

#include "bess/timeseries.hpp"

namespace bess {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr std::size_t kHeldOutPoints = 512;

double held_out_rmse(const icnn::Icnn& net, const BatteryParams& battery, icnn::Side side) {
    const auto grid = icnn::generate_training_data(battery, side, kHeldOutPoints);
    return icnn::rmse(net, grid.inputs, grid.targets);
}

ReportRow row_from(Method method, const DispatchResult& r) {
    ReportRow row;
    row.method = method;
    row.status = opt::to_string(r.status);
    row.solver_time_s = r.solve_time_s;
    row.predicted = r.predicted_metric;
    row.actual = r.actual_metric;
    row.feasibility_gap = method == Method::relaxed_icnn ? r.feasibility_gap : kNaN;
    row.objective = r.objective;
    row.iterations = r.iterations;
    row.node_count = r.node_count;
    row.mip_gap = r.mip_gap;
    row.degraded = r.degraded;
    if (!r.schedule.p_c.empty()) {
        row.saturated = r.saturated();
        row.schedule = r.schedule;
        row.predicted_soc = r.predicted_soc;
        row.actual_soc = r.actual.e;
    }
    return row;
}

opt::MiqpSettings miqp_settings(const RunConfig& config, opt::BinaryHeuristic heuristic) {
    opt::MiqpSettings s;
    s.rel_gap = config.mip_gap;
    s.node_limit = config.node_limit;
    s.time_limit_s = config.mip_time_limit_s;
    s.qp = config.qp;
    s.heuristic = std::move(heuristic);
    return s;
}

}  // namespace

std::string to_string(Method method) {
    switch (method) {
        case Method::nlp: return "nlp";
        case Method::linear: return "linear";
        case Method::relaxed_icnn: return "relaxed_icnn";
        case Method::bigm_icnn: return "bigm_icnn";
    }
    return "unknown";
}

Method parse_method(const std::string& text) {
    for (Method m : kAllMethods)
        if (to_string(m) == text) return m;
    throw DomainError("unknown method '" + text + "' (expected nlp, linear, relaxed_icnn or bigm_icnn)");
}

void RunConfig::validate() const {
    battery.validate();
    if (methods.empty()) throw DomainError("no methods requested");
    if (data.steps == 0) throw DomainError("steps must be positive");
    if (e0 < battery.e_min_frac || e0 > battery.e_max_frac) throw DomainError("e0 outside the SoC bounds");
    if (lambda && !(*lambda >= 0.0)) throw DomainError("lambda must be nonnegative");
    if (!(big_m > 0.0)) throw DomainError("big_m must be positive");
    if (!(alpha >= 0.0)) throw DomainError("alpha must be nonnegative");
    if (!(eta_c_const > 0.0 && eta_c_const <= 1.0) || !(eta_d_const > 0.0 && eta_d_const <= 1.0)) {
        throw DomainError("constant efficiencies must lie in (0, 1]");
    }
    if (!(qp.tol > 0.0) || qp.max_iter < 1) throw DomainError("qp tolerance and iteration cap must be positive");
    if (!(mip_gap >= 0.0) || node_limit < 1) throw DomainError("mip gap must be >= 0 and node limit >= 1");
    if (!(mip_time_limit_s > 0.0)) throw DomainError("mip time limit must be positive");
    if (nlp.n_starts < 0 || nlp.max_iter < 1) throw DomainError("nlp starts must be >= 0 and iterations >= 1");
    if (!(rho_bound > 0.0) || !(rho_comp > 0.0)) throw DomainError("penalty weights must be positive");
    if (!(data.pv_peak_kw >= 0.0)) throw DomainError("pv peak must be nonnegative");
    if (surrogate.train_points < 2) throw DomainError("at least two training points are needed");
    surrogate.hyper.validate();
}

double RunConfig::effective_lambda() const { return lambda.value_or(default_lambda(use_case)); }

Surrogates load_or_train(const SurrogateConfig& config, const BatteryParams& battery) {
    Surrogates out;
    const auto t0 = std::chrono::steady_clock::now();
    auto obtain = [&](const std::filesystem::path& path, icnn::Side side) {
        if (!path.empty()) {
            icnn::Icnn net = icnn::load_model(path);
            net.validate();
            return net;
        }
        out.trained = true;
        const auto data = icnn::generate_training_data(battery, side, config.train_points);
        return icnn::adam_train(data, config.widths, config.hyper);
    };
    out.charge = obtain(config.charge_model, icnn::Side::charge);
    out.discharge = obtain(config.discharge_model, icnn::Side::discharge);
    out.train_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out.charge_rmse = held_out_rmse(out.charge, battery, icnn::Side::charge);
    out.discharge_rmse = held_out_rmse(out.discharge, battery, icnn::Side::discharge);
    return out;
}

UseCase make_usecase(const RunConfig& config) {
    UseCase uc;
    uc.kind = config.use_case;
    uc.horizon = config.data.steps;
    uc.e0 = config.e0;
    const std::size_t need = uc.kind == UseCaseKind::pv_smoothing ? uc.horizon + 1 : uc.horizon;
    if (config.data.synthetic()) {
        const auto& d = config.data;
        uc.data = uc.kind == UseCaseKind::pv_smoothing
                      ? synth_pv(d.seed, uc.horizon, d.pv_peak_kw, config.battery.dt_hours, d.start_hour)
                      : synth_lmp(d.seed, uc.horizon, config.battery.dt_hours, d.start_hour);
    } else {
        uc.data = load_timeseries_csv(config.data.csv_path);
        if (uc.data.size() < need) {
            throw DomainError(config.data.csv_path.string() + ": " + std::to_string(uc.data.size()) +
                              " values, the horizon needs " + std::to_string(need));
        }
        uc.data.resize(need);
    }
    uc.validate(config.battery);
    return uc;
}

ScenarioMeta describe(const RunConfig& config, const Surrogates& nets) {
    ScenarioMeta m;
    m.use_case = config.use_case;
    m.data_source = config.data.synthetic() ? "synthetic" : config.data.csv_path.filename().string();
    m.seed = config.data.seed;
    m.steps = config.data.steps;
    m.dt_hours = config.battery.dt_hours;
    m.e0 = config.e0;
    m.lambda = config.effective_lambda();
    m.big_m = config.big_m;
    m.alpha = config.alpha;
    m.battery = config.battery;
    m.widths = nets.charge.widths();
    m.charge_rmse = nets.charge_rmse;
    m.discharge_rmse = nets.discharge_rmse;
    return m;
}

ReportRow run_method(Method method, const UseCase& uc, const RunConfig& config, const Surrogates& nets) {
    const BatteryParams& params = config.battery;
    try {
        switch (method) {
            case Method::nlp: {
                const auto problem = build_nlp(uc, params, config.rho_bound, config.rho_comp);
                const auto res = opt::solve_nlp_multistart(problem, config.nlp);
                DispatchResult r = evaluate_schedule(res.schedule, {}, uc, params);
                r.objective = res.objective;
                r.solve_time_s = res.solve_time_s;
                r.iterations = res.iterations;
                return row_from(method, r);
            }
            case Method::linear: {
                const DispatchResult r = two_stage_linear_solve(uc, params, config.alpha, config.qp, config.eta_c_const,
                                                                config.eta_d_const);
                return row_from(method, r);
            }
            case Method::relaxed_icnn: {
                const auto built = build_relaxed_icnn(uc, params, nets.charge, nets.discharge, config.effective_lambda());
                const auto sol = opt::solve_qp(built.qp, config.qp);
                return row_from(method, extract_result(sol, built.layout, uc, params, &nets.charge, &nets.discharge));
            }
            case Method::bigm_icnn: {
                const auto built = build_bigm_icnn(uc, params, nets.charge, nets.discharge,
                                                   BigMOptions{config.big_m, true, config.bigm_tighten});
                const auto sol = opt::solve_miqp(built.mip, miqp_settings(config, built.heuristic));
                ReportRow row = row_from(method, extract_result(sol, built.layout, uc, params));
                if (sol.x.size() == built.layout.size()) {
                    const auto audit = audit_bigm(sol.x, built.layout, nets.charge, nets.discharge);
                    if (!audit.ok()) {
                        row.warning = "big-M audit: " + std::to_string(audit.mismatches) +
                                      " units disagree with the forward pass; M may be too small";
                    }
                }
                return row;
            }
        }
    } catch (const std::exception& e) {
        ReportRow row;
        row.method = method;
        row.status = "error";
        row.predicted = row.actual = row.feasibility_gap = row.objective = row.mip_gap = kNaN;
        row.error = e.what();
        return row;
    }
    throw DomainError("unhandled method");
}

ExperimentReport run_experiment(const RunConfig& config, const Surrogates& nets) {
    config.validate();
    const UseCase uc = make_usecase(config);
    ExperimentReport report;
    report.meta = describe(config, nets);
    for (Method m : config.methods) report.rows.push_back(run_method(m, uc, config, nets));
    return report;
}

std::vector<double> default_lambda_grid() {
    constexpr int kPoints = 15;
    std::vector<double> grid(kPoints);
    for (int i = 0; i < kPoints; ++i) grid[static_cast<std::size_t>(i)] = std::pow(10.0, -6.0 + 5.0 * i / (kPoints - 1));
    return grid;
}

SweepReport lambda_sweep(const RunConfig& config, const Surrogates& nets, std::span<const double> grid) {
    config.validate();
    if (grid.empty()) throw DomainError("lambda grid is empty");
    for (const double lambda : grid)
        if (!(lambda >= 0.0)) throw DomainError("lambda grid values must be nonnegative");
    const UseCase uc = make_usecase(config);
    SweepReport report;
    report.meta = describe(config, nets);
    for (const double lambda : grid) {
        RunConfig point = config;
        point.lambda = lambda;
        const ReportRow row = run_method(Method::relaxed_icnn, uc, point, nets);
        report.points.push_back(
            SweepPoint{lambda, row.status, row.solver_time_s, row.predicted, row.actual, row.feasibility_gap});
    }
    return report;
}

}  // namespace bess
