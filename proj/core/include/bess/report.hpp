#pragma once

// Report serialization. JSON reports carry no wall-clock values so identical
// runs give identical bytes; solver times go to the CSV and a separate timing file.

#include <filesystem>
#include <string>

#include "bess/experiment.hpp"

namespace bess {

/// Columns: method, solver_time_s, predicted, actual, gap, status. NaN cells are empty.
std::string report_csv(const ExperimentReport& report);

/// Scenario metadata, rows (without times) and per-method schedules.
std::string report_json(const ExperimentReport& report);

/// Solver wall-clock seconds per method.
std::string timing_json(const ExperimentReport& report);

/// Long format: method, step, p_c, p_d, soc_predicted, soc_actual (K+1 SoC points per method).
std::string schedules_csv(const ExperimentReport& report);

/// Writes report.csv, report.json, timing.json and schedules.csv into dir (created if missing).
void write_experiment_report(const std::filesystem::path& dir, const ExperimentReport& report);

/// Columns: lambda, solver_time_s, predicted, actual, gap, status.
std::string sweep_csv(const SweepReport& report);
std::string sweep_json(const SweepReport& report);

/// Writes sweep.csv, sweep.json and sweep_timing.json into dir.
void write_sweep_report(const std::filesystem::path& dir, const SweepReport& report);

/// Writes text to path in binary mode; throws std::runtime_error on failure.
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace bess
