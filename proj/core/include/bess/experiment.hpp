#pragma once

// Scenario configuration and orchestration: surrogate training or loading,
// per-method dispatch runs and the lambda sweep.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bess/formulations.hpp"
#include "bess/icnn.hpp"
#include "bess/miqp.hpp"
#include "bess/nlp.hpp"
#include "bess/qp.hpp"

namespace bess {

enum class Method { nlp, linear, relaxed_icnn, bigm_icnn };

std::string to_string(Method method);
Method parse_method(const std::string& text);

inline const std::vector<Method> kAllMethods{Method::nlp, Method::linear, Method::relaxed_icnn, Method::bigm_icnn};

/// A CSV file when csv_path is set, otherwise the seeded generator for the use case.
struct DataSpec {
    std::filesystem::path csv_path;
    std::uint64_t seed{42};
    std::size_t steps{192};
    double pv_peak_kw{100.0};
    double start_hour{6.0};

    [[nodiscard]] bool synthetic() const { return csv_path.empty(); }
};

struct SurrogateConfig {
    std::filesystem::path charge_model;     // loaded when set, trained otherwise
    std::filesystem::path discharge_model;
    std::vector<int> widths = icnn::kDefaultWidths;
    std::size_t train_points{256};
    icnn::TrainHyper hyper{};
};

struct RunConfig {
    UseCaseKind use_case{UseCaseKind::pv_smoothing};
    std::vector<Method> methods{kAllMethods};
    BatteryParams battery{};
    DataSpec data{};
    double e0{0.5};

    std::optional<double> lambda;  // default_lambda(use_case) when unset
    double big_m{kDefaultBigM};
    bool bigm_tighten{true};
    double alpha{kDefaultAlpha};
    double eta_c_const{kDefaultEtaC};
    double eta_d_const{kDefaultEtaD};

    opt::QpSettings qp{};
    double mip_gap{1e-4};
    int node_limit{2000};
    double mip_time_limit_s{opt::kInf};
    opt::NlpSettings nlp{};
    double rho_bound{kDefaultRho};
    double rho_comp{kDefaultRho};

    SurrogateConfig surrogate{};
    std::filesystem::path out_dir{"out"};

    /// Throws DomainError on out-of-domain knobs or an empty method list.
    void validate() const;
    [[nodiscard]] double effective_lambda() const;
};

struct Surrogates {
    icnn::Icnn charge;
    icnn::Icnn discharge;
    bool trained{false};
    double charge_rmse{0.0};     // held-out 512-point grid
    double discharge_rmse{0.0};
    double train_time_s{0.0};
};

/// Loads both model files when given, trains the missing ones otherwise.
Surrogates load_or_train(const SurrogateConfig& config, const BatteryParams& battery);

/// Reads or synthesizes the data series and truncates it to the horizon.
UseCase make_usecase(const RunConfig& config);

struct ReportRow {
    Method method{Method::linear};
    std::string status;
    double solver_time_s{0.0};
    double predicted{0.0};  // smoothing MSE in kW^2 or revenue in $
    double actual{0.0};
    double feasibility_gap{0.0};  // relaxed method only, NaN elsewhere
    double objective{0.0};
    int iterations{0};
    int node_count{0};
    double mip_gap{0.0};
    bool saturated{false};
    bool degraded{false};
    std::string error;    // set when the method threw
    std::string warning;  // big-M audit disagreement
    DispatchSchedule schedule;
    std::vector<double> predicted_soc;
    std::vector<double> actual_soc;
};

struct ScenarioMeta {
    UseCaseKind use_case{UseCaseKind::pv_smoothing};
    std::string data_source;
    std::uint64_t seed{0};
    std::size_t steps{0};
    double dt_hours{0.0};
    double e0{0.0};
    double lambda{0.0};
    double big_m{0.0};
    double alpha{0.0};
    BatteryParams battery{};
    std::vector<int> widths;
    double charge_rmse{0.0};
    double discharge_rmse{0.0};
};

struct ExperimentReport {
    ScenarioMeta meta;
    std::vector<ReportRow> rows;
};

ScenarioMeta describe(const RunConfig& config, const Surrogates& nets);

/// Solves one method; solver failures and exceptions land in the row status.
ReportRow run_method(Method method, const UseCase& uc, const RunConfig& config, const Surrogates& nets);

/// One row per requested method, in request order.
ExperimentReport run_experiment(const RunConfig& config, const Surrogates& nets);

struct SweepPoint {
    double lambda{0.0};
    std::string status;
    double solver_time_s{0.0};
    double predicted{0.0};
    double actual{0.0};
    double feasibility_gap{0.0};
};

struct SweepReport {
    ScenarioMeta meta;
    std::vector<SweepPoint> points;
};

/// 15 log-spaced values from 1e-6 to 1e-1.
std::vector<double> default_lambda_grid();

/// Relaxed-ICNN solve per lambda; points in grid order.
SweepReport lambda_sweep(const RunConfig& config, const Surrogates& nets, std::span<const double> grid);

}  // namespace bess
