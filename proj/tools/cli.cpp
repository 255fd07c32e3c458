#include "cli.hpp"

#include <cstdio>
#include <exception>
#include <ostream>

#include <CLI11.hpp>

#include "bess/experiment.hpp"
#include "bess/report.hpp"
#include "bess/timeseries.hpp"

namespace bess::cli {

namespace {

struct Options {
    RunConfig run;
    std::string use_case{"smoothing"};
    std::vector<std::string> methods;
    double lambda{-1.0};  // negative: use-case default
    std::vector<double> lambda_grid;
    std::string kind{"pv"};
    std::string output;
};

void add_run_options(CLI::App& app, Options& o) {
    RunConfig& r = o.run;
    app.add_option("--seed", r.data.seed, "Seed for synthetic data")->capture_default_str();
    app.add_option("--out-dir", r.out_dir, "Directory for reports and models")->capture_default_str();

    app.add_option("--use-case", o.use_case, "smoothing or revenue")->capture_default_str();
    app.add_option("--method", o.methods, "nlp, linear, relaxed_icnn or bigm_icnn (repeatable)");
    app.add_option("--data", r.data.csv_path, "timestamp,value CSV; synthetic data when omitted");
    app.add_option("--steps", r.data.steps, "Horizon K")->capture_default_str();
    app.add_option("--pv-peak-kw", r.data.pv_peak_kw, "Synthetic PV peak")->capture_default_str();
    app.add_option("--start-hour", r.data.start_hour, "Clock hour of the first step")->capture_default_str();
    app.add_option("--e0", r.e0, "Initial SoC fraction")->capture_default_str();

    BatteryParams& b = r.battery;
    app.add_option("--p-max-kw", b.p_max_kw)->capture_default_str();
    app.add_option("--capacity-kwh", b.capacity_kwh)->capture_default_str();
    app.add_option("--e-max-frac", b.e_max_frac)->capture_default_str();
    app.add_option("--e-min-frac", b.e_min_frac)->capture_default_str();
    app.add_option("--eta-c-max", b.eta_c_max)->capture_default_str();
    app.add_option("--eta-d-max", b.eta_d_max)->capture_default_str();
    app.add_option("--dt-hours", b.dt_hours)->capture_default_str();
    app.add_option("--knee", b.knee, "Efficiency-curve knee, per-unit power")->capture_default_str();

    app.add_option("--lambda", o.lambda, "Relaxation penalty; use-case default when omitted");
    app.add_option("--lambda-grid", o.lambda_grid, "Sweep values; 15 log-spaced points in [1e-6, 1e-1] when omitted");
    app.add_option("--big-m", r.big_m)->capture_default_str();
    app.add_option("--bigm-tighten", r.bigm_tighten, "Cap per-unit constants at the exact pre-activation range")
        ->capture_default_str();
    app.add_option("--alpha", r.alpha, "Stage-two weight of the linear method")->capture_default_str();
    app.add_option("--eta-c-const", r.eta_c_const, "Linear-model charge efficiency")->capture_default_str();
    app.add_option("--eta-d-const", r.eta_d_const, "Linear-model discharge efficiency")->capture_default_str();

    app.add_option("--qp-tol", r.qp.tol)->capture_default_str();
    app.add_option("--qp-max-iter", r.qp.max_iter)->capture_default_str();
    app.add_option("--mip-gap", r.mip_gap)->capture_default_str();
    app.add_option("--node-limit", r.node_limit)->capture_default_str();
    app.add_option("--mip-time-limit", r.mip_time_limit_s, "Seconds")->capture_default_str();
    app.add_option("--starts", r.nlp.n_starts, "NLP random starts")->capture_default_str();
    app.add_option("--nlp-seed", r.nlp.seed)->capture_default_str();
    app.add_option("--nlp-max-iter", r.nlp.max_iter)->capture_default_str();
    app.add_option("--rho-bound", r.rho_bound)->capture_default_str();
    app.add_option("--rho-comp", r.rho_comp)->capture_default_str();

    SurrogateConfig& s = r.surrogate;
    app.add_option("--charge-model", s.charge_model, "ICNN JSON; trained when omitted");
    app.add_option("--discharge-model", s.discharge_model, "ICNN JSON; trained when omitted");
    app.add_option("--widths", s.widths, "Hidden widths, last must be 1")->capture_default_str();
    app.add_option("--train-points", s.train_points)->capture_default_str();
    app.add_option("--epochs", s.hyper.epochs)->capture_default_str();
    app.add_option("--learning-rate", s.hyper.learning_rate)->capture_default_str();
    app.add_option("--train-seed", s.hyper.seed)->capture_default_str();

    app.add_option("--kind", o.kind, "synth-data series: pv or lmp")->capture_default_str();
    app.add_option("--output", o.output, "synth-data CSV path; <out-dir>/<kind>.csv when omitted");
}

void finish(Options& o) {
    o.run.use_case = parse_use_case(o.use_case);
    if (!o.methods.empty()) {
        o.run.methods.clear();
        for (const auto& m : o.methods) o.run.methods.push_back(parse_method(m));
    }
    if (o.lambda >= 0.0) o.run.lambda = o.lambda;
    if (o.kind != "pv" && o.kind != "lmp") throw DomainError("unknown series kind '" + o.kind + "' (expected pv or lmp)");
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

Surrogates surrogates(const Options& o, std::ostream& out) {
    Surrogates nets = load_or_train(o.run.surrogate, o.run.battery);
    out << (nets.trained ? "trained" : "loaded") << " surrogates: rmse charge " << fmt(nets.charge_rmse)
        << ", discharge " << fmt(nets.discharge_rmse) << '\n';
    return nets;
}

void print_rows(const ExperimentReport& report, std::ostream& out) {
    for (const auto& r : report.rows) {
        out << to_string(r.method) << ": " << r.status << ", predicted " << fmt(r.predicted) << ", actual "
            << fmt(r.actual) << ", " << fmt(r.solver_time_s) << " s";
        if (r.method == Method::relaxed_icnn) out << ", gap " << fmt(r.feasibility_gap);
        if (!r.error.empty()) out << " (" << r.error << ')';
        if (!r.warning.empty()) out << " (" << r.warning << ')';
        out << '\n';
    }
}

int train_icnn(Options o, std::ostream& out) {
    o.run.surrogate.charge_model.clear();
    o.run.surrogate.discharge_model.clear();
    o.run.surrogate.hyper.validate();
    const Surrogates nets = surrogates(o, out);
    std::filesystem::create_directories(o.run.out_dir);
    icnn::save_model(nets.charge, o.run.out_dir / "charge.json");
    icnn::save_model(nets.discharge, o.run.out_dir / "discharge.json");
    out << "wrote " << (o.run.out_dir / "charge.json").string() << " and " << (o.run.out_dir / "discharge.json").string()
        << '\n';
    return 0;
}

int experiment(const Options& o, std::ostream& out) {
    o.run.validate();
    const Surrogates nets = surrogates(o, out);
    const ExperimentReport report = run_experiment(o.run, nets);
    write_experiment_report(o.run.out_dir, report);
    print_rows(report, out);
    out << "wrote reports to " << o.run.out_dir.string() << '\n';
    return 0;
}

int sweep(const Options& o, std::ostream& out) {
    o.run.validate();
    const Surrogates nets = surrogates(o, out);
    const std::vector<double> grid = o.lambda_grid.empty() ? default_lambda_grid() : o.lambda_grid;
    const SweepReport report = lambda_sweep(o.run, nets, grid);
    write_sweep_report(o.run.out_dir, report);
    for (const auto& p : report.points) {
        out << "lambda " << fmt(p.lambda) << ": " << p.status << ", predicted " << fmt(p.predicted) << ", actual "
            << fmt(p.actual) << ", gap " << fmt(p.feasibility_gap) << '\n';
    }
    out << "wrote sweep to " << o.run.out_dir.string() << '\n';
    return 0;
}

int synth(const Options& o, std::ostream& out) {
    const RunConfig& r = o.run;
    if (r.data.steps == 0) throw DomainError("steps must be positive");
    std::vector<double> values;
    if (o.kind == "pv") {
        values = synth_pv(r.data.seed, r.data.steps, r.data.pv_peak_kw, r.battery.dt_hours, r.data.start_hour);
    } else {
        values = synth_lmp(r.data.seed, r.data.steps, r.battery.dt_hours, r.data.start_hour);
    }
    std::filesystem::path path = o.output;
    if (path.empty()) {
        std::filesystem::create_directories(r.out_dir);
        path = r.out_dir / (o.kind + ".csv");
    }
    write_timeseries_csv(path, values);
    out << "wrote " << values.size() << " values to " << path.string() << '\n';
    return 0;
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Battery dispatch with ICNN efficiency surrogates", "bessopt"};
    app.set_config("--config", "", "Flat key = value TOML file; keys are the long option names");
    app.allow_config_extras(CLI::config_extras_mode::error);
    Options o;
    add_run_options(app, o);
    app.fallthrough();  // inherited by the subcommands below

    auto* train_cmd = app.add_subcommand("train-icnn", "Train both surrogates and write charge.json/discharge.json");
    auto* solve_cmd = app.add_subcommand("solve", "Run one method and write its report");
    auto* experiment_cmd = app.add_subcommand("experiment", "Run all requested methods and write reports");
    auto* sweep_cmd = app.add_subcommand("sweep-lambda", "Relaxed-ICNN solves over a lambda grid");
    auto* synth_cmd = app.add_subcommand("synth-data", "Write a synthetic PV or LMP series as CSV");
    app.require_subcommand(0, 1);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return 1;
    }
    if (app.get_subcommands().empty()) {
        err << app.help();
        return 1;
    }

    try {
        finish(o);
    } catch (const DomainError& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    if (solve_cmd->parsed() && o.methods.size() != 1) {
        err << "error: solve needs exactly one --method\n";
        return 1;
    }

    try {
        if (train_cmd->parsed()) return train_icnn(o, out);
        if (solve_cmd->parsed() || experiment_cmd->parsed()) return experiment(o, out);
        if (sweep_cmd->parsed()) return sweep(o, out);
        if (synth_cmd->parsed()) return synth(o, out);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }
    return 1;
}

}  // namespace bess::cli
