#include "bess/timeseries.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

namespace bess {

namespace {

std::string trim(std::string s) {
    const auto not_space = [](unsigned char ch) { return !std::isspace(ch); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
    s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
    return s;
}

}  // namespace

std::vector<double> load_timeseries_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path.string() + ": cannot open file");

    std::vector<double> values;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1) continue;  // header
        line = trim(line);
        if (line.empty()) continue;
        const auto where = path.string() + ":" + std::to_string(line_no) + ": ";
        const auto comma = line.find(',');
        if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos) {
            throw ParseError(where + "expected two columns 'timestamp,value'");
        }
        const std::string field = trim(line.substr(comma + 1));
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
        if (ec != std::errc() || ptr != field.data() + field.size()) {
            throw ParseError(where + "malformed value '" + field + "'");
        }
        if (!std::isfinite(v)) throw ParseError(where + "non-finite value '" + field + "'");
        values.push_back(v);
    }
    if (line_no == 0) throw ParseError(path.string() + ": missing header line");
    return values;
}

void write_timeseries_csv(const std::filesystem::path& path, std::span<const double> values) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");
    out << "timestamp,value\n";
    char buf[64];
    for (std::size_t k = 0; k < values.size(); ++k) {
        std::snprintf(buf, sizeof buf, "%.17g", values[k]);
        out << k << ',' << buf << '\n';
    }
    if (!out) throw std::runtime_error(path.string() + ": write failed");
}

}  // namespace bess
