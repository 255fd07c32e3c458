#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <vector>

namespace bess {

/// CSV or config parse failure; the message names the offending line.
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Reads a two-column `timestamp,value` CSV with a one-line header.
/// Timestamps are not interpreted; values must be finite.
std::vector<double> load_timeseries_csv(const std::filesystem::path& path);

/// Writes `timestamp,value` rows with integer step timestamps and 17 significant digits.
void write_timeseries_csv(const std::filesystem::path& path, std::span<const double> values);

/// Clear-sky half-sine between 6 AM and 10 PM scaled to p_peak_kw, times a
/// correlated cloud factor in [0.3, 1]. Returns K+1 samples starting at start_hour.
std::vector<double> synth_pv(std::uint64_t seed, std::size_t K, double p_peak_kw = 100.0,
                             double dt_hours = 1.0 / 12.0, double start_hour = 6.0);

/// Morning and evening price peaks plus correlated noise, clamped to
/// [0.01, 0.12] $/kWh. Returns K samples starting at start_hour.
std::vector<double> synth_lmp(std::uint64_t seed, std::size_t K, double dt_hours = 1.0 / 12.0,
                              double start_hour = 6.0);

}  // namespace bess
