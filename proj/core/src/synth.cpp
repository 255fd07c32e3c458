#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "bess/erm.hpp"
#include "bess/timeseries.hpp"

namespace bess {

namespace {

constexpr double kSunrise = 6.0;
constexpr double kSunset = 22.0;

void check_grid(double dt_hours) {
    if (!(dt_hours > 0.0)) throw DomainError("dt_hours must be positive");
}

// Zero-mean AR(1) with unit stationary variance.
class Ar1 {
public:
    Ar1(std::uint64_t seed, double phi) : rng_(seed), phi_(phi), x_(normal_(rng_)) {}
    double next() {
        const double out = x_;
        x_ = phi_ * x_ + std::sqrt(1.0 - phi_ * phi_) * normal_(rng_);
        return out;
    }

private:
    std::mt19937_64 rng_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    double phi_;
    double x_;
};

}  // namespace

std::vector<double> synth_pv(std::uint64_t seed, std::size_t K, double p_peak_kw, double dt_hours,
                             double start_hour) {
    check_grid(dt_hours);
    if (!(p_peak_kw >= 0.0)) throw DomainError("p_peak_kw must be nonnegative");
    Ar1 cloud(seed, 0.9);
    std::vector<double> pv(K + 1);
    for (std::size_t k = 0; k <= K; ++k) {
        const double t = std::fmod(start_hour + static_cast<double>(k) * dt_hours, 24.0);
        const double factor = std::clamp(0.8 + 0.2 * cloud.next(), 0.3, 1.0);
        double clear = 0.0;
        if (t > kSunrise && t < kSunset) clear = std::sin(std::numbers::pi * (t - kSunrise) / (kSunset - kSunrise));
        pv[k] = std::clamp(p_peak_kw * clear * factor, 0.0, p_peak_kw);
    }
    return pv;
}

std::vector<double> synth_lmp(std::uint64_t seed, std::size_t K, double dt_hours, double start_hour) {
    check_grid(dt_hours);
    Ar1 noise(seed, 0.8);
    std::vector<double> lmp(K);
    for (std::size_t k = 0; k < K; ++k) {
        const double t = std::fmod(start_hour + static_cast<double>(k) * dt_hours, 24.0);
        const double morning = 0.035 * std::exp(-std::pow((t - 8.0) / 1.5, 2));
        const double evening = 0.06 * std::exp(-std::pow((t - 19.0) / 2.0, 2));
        const double base = 0.03 + morning + evening;
        lmp[k] = std::clamp(base + 0.006 * noise.next(), 0.01, 0.12);
    }
    return lmp;
}

}  // namespace bess
