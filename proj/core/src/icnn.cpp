#include "bess/icnn.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace bess::icnn {

Icnn::Icnn(std::vector<Layer> layers) : layers_(std::move(layers)) { check_shapes(); }

Icnn Icnn::zeros(std::span<const int> widths) {
    if (widths.empty()) throw StructureError("an ICNN needs at least one layer");
    std::vector<Layer> layers;
    Eigen::Index prev = 1;
    for (int w : widths) {
        if (w <= 0) throw StructureError("layer widths must be positive");
        layers.push_back({Eigen::MatrixXd::Zero(w, prev), Eigen::MatrixXd::Zero(w, 1), Eigen::VectorXd::Zero(w)});
        prev = w;
    }
    return Icnn(std::move(layers));
}

std::vector<int> Icnn::widths() const {
    std::vector<int> out;
    out.reserve(layers_.size());
    for (const auto& layer : layers_) out.push_back(static_cast<int>(layer.width()));
    return out;
}

int Icnn::total_units() const {
    int total = 0;
    for (const auto& layer : layers_) total += static_cast<int>(layer.width());
    return total;
}

void Icnn::check_shapes() const {
    if (layers_.empty()) throw StructureError("an ICNN needs at least one layer");
    Eigen::Index prev = 1;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const auto& layer = layers_[i];
        const Eigen::Index w = layer.b.size();
        const std::string where = "layer " + std::to_string(i + 1);
        if (w == 0) throw StructureError(where + " has zero width");
        if (layer.W.rows() != w || layer.W.cols() != prev) {
            throw StructureError(where + ": W is " + std::to_string(layer.W.rows()) + "x" +
                                 std::to_string(layer.W.cols()) + ", expected " + std::to_string(w) + "x" +
                                 std::to_string(prev));
        }
        if (layer.D.rows() != w || layer.D.cols() != 1) {
            throw StructureError(where + ": D must be " + std::to_string(w) + "x1");
        }
        prev = w;
    }
    if (prev != 1) throw StructureError("the final layer must have width 1");
}

void Icnn::validate() const {
    check_shapes();
    if (!layers_.front().D.isZero(0.0)) throw StructureError("D of the first layer must be zero");
    for (std::size_t i = 1; i < layers_.size(); ++i) {
        if ((layers_[i].W.array() < 0.0).any()) {
            throw StructureError("W of layer " + std::to_string(i + 1) + " has negative entries");
        }
    }
}

bool Icnn::satisfies_invariants() const noexcept {
    try {
        validate();
        return true;
    } catch (const StructureError&) {
        return false;
    }
}

double Icnn::forward(double x) const {
    if (layers_.empty()) throw StructureError("forward pass through an empty network");
    const auto& first = layers_[0];
    Eigen::VectorXd z = (first.W.col(0) * x + first.D.col(0) * x + first.b).cwiseMax(0.0);
    for (std::size_t i = 1; i < layers_.size(); ++i) {
        const auto& layer = layers_[i];
        z = (layer.W * z + layer.D.col(0) * x + layer.b).cwiseMax(0.0);
    }
    return z(0);
}

std::vector<Eigen::VectorXd> Icnn::activations(double x) const {
    std::vector<Eigen::VectorXd> out;
    out.reserve(layers_.size());
    const auto& first = layers_[0];
    out.push_back((first.W.col(0) * x + first.D.col(0) * x + first.b).cwiseMax(0.0));
    for (std::size_t i = 1; i < layers_.size(); ++i) {
        const auto& layer = layers_[i];
        out.push_back((layer.W * out.back() + layer.D.col(0) * x + layer.b).cwiseMax(0.0));
    }
    return out;
}

Icnn project_nonneg(Icnn net) {
    auto& layers = net.mutable_layers();
    for (std::size_t i = 1; i < layers.size(); ++i) layers[i].W = layers[i].W.cwiseMax(0.0);
    return net;
}

void TrainingSet::validate() const {
    if (inputs.size() != targets.size()) throw StructureError("training inputs and targets differ in length");
    for (double p : inputs) {
        if (!(p >= 0.0 && p <= 1.0)) throw DomainError("training inputs must lie in [0, 1]");
    }
}

TrainingSet generate_training_data(const BatteryParams& params, Side side, std::size_t n) {
    params.validate();
    TrainingSet data;
    data.inputs.resize(n);
    data.targets.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double p = n == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(n - 1);
        data.inputs[i] = p;
        data.targets[i] = side == Side::charge ? charge_energy(p, params) : discharge_energy(p, params);
    }
    return data;
}

double rmse(const Icnn& net, std::span<const double> inputs, std::span<const double> targets) {
    if (inputs.size() != targets.size() || inputs.empty()) {
        throw StructureError("rmse needs equal-length, non-empty inputs and targets");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        const double r = net.forward(inputs[i]) - targets[i];
        total += r * r;
    }
    return std::sqrt(total / static_cast<double>(inputs.size()));
}

ConvexityReport check_convexity(const Icnn& net, int n_pairs, std::uint64_t seed) {
    constexpr double kSlack = 1e-9;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-0.5, 1.5);
    ConvexityReport report;
    report.pairs = n_pairs;
    for (int i = 0; i < n_pairs; ++i) {
        const double a = dist(rng);
        const double b = dist(rng);
        const double excess = net.forward(0.5 * (a + b)) - 0.5 * (net.forward(a) + net.forward(b));
        if (excess > kSlack) {
            ++report.violations;
            report.max_violation = std::max(report.max_violation, excess);
        }
    }
    return report;
}

PreActivationBounds pre_activation_bounds(const Icnn& net, double lo, double hi) {
    PreActivationBounds out;
    const auto& layers = net.layers();
    Eigen::VectorXd z_lo = Eigen::VectorXd::Constant(1, lo);
    Eigen::VectorXd z_hi = Eigen::VectorXd::Constant(1, hi);
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const auto& layer = layers[i];
        const Eigen::MatrixXd Wp = layer.W.cwiseMax(0.0);
        const Eigen::MatrixXd Wn = layer.W.cwiseMin(0.0);
        const Eigen::VectorXd Dp = layer.D.col(0).cwiseMax(0.0);
        const Eigen::VectorXd Dn = layer.D.col(0).cwiseMin(0.0);
        Eigen::VectorXd a_lo = Wp * z_lo + Wn * z_hi + Dp * lo + Dn * hi + layer.b;
        Eigen::VectorXd a_hi = Wp * z_hi + Wn * z_lo + Dp * hi + Dn * lo + layer.b;
        out.lower.push_back(a_lo);
        out.upper.push_back(a_hi);
        z_lo = a_lo.cwiseMax(0.0);
        z_hi = a_hi.cwiseMax(0.0);
    }
    return out;
}

namespace {

std::vector<Eigen::VectorXd> pre_activations(const Icnn& net, double x) {
    std::vector<Eigen::VectorXd> out;
    Eigen::VectorXd z = Eigen::VectorXd::Constant(1, x);
    for (const auto& layer : net.layers()) {
        Eigen::VectorXd a = layer.W * z + layer.D.col(0) * x + layer.b;
        z = a.cwiseMax(0.0);
        out.push_back(std::move(a));
    }
    return out;
}

}  // namespace

PreActivationBounds pre_activation_ranges(const Icnn& net, double lo, double hi) {
    net.validate();
    if (!(lo <= hi)) throw DomainError("empty input interval");
    constexpr double kMargin = 1e-9;
    constexpr int kGoldenSteps = 80;
    const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
    const auto at_lo = pre_activations(net, lo);
    const auto at_hi = pre_activations(net, hi);
    PreActivationBounds out;
    for (std::size_t i = 0; i < net.num_layers(); ++i) {
        const Eigen::Index width = at_lo[i].size();
        Eigen::VectorXd lower(width), upper(width);
        for (Eigen::Index j = 0; j < width; ++j) {
            auto value = [&](double x) { return pre_activations(net, x)[i](j); };
            // Convex in x: the maximum sits at an end, the minimum is found by golden section.
            upper(j) = std::max(at_lo[i](j), at_hi[i](j)) + kMargin;
            double a = lo, b = hi;
            double c = b - ratio * (b - a), d = a + ratio * (b - a);
            double fc = value(c), fd = value(d);
            for (int it = 0; it < kGoldenSteps; ++it) {
                if (fc <= fd) {
                    b = d, d = c, fd = fc;
                    c = b - ratio * (b - a);
                    fc = value(c);
                } else {
                    a = c, c = d, fc = fd;
                    d = a + ratio * (b - a);
                    fd = value(d);
                }
            }
            lower(j) = std::min({fc, fd, at_lo[i](j), at_hi[i](j)}) - kMargin;
        }
        out.lower.push_back(std::move(lower));
        out.upper.push_back(std::move(upper));
    }
    return out;
}

}  // namespace bess::icnn
