#pragma once

// Scalar-input input-convex neural networks with ReLU activations.
//
//   z_1 = relu(W_1 x + b_1)
//   z_i = relu(W_i z_{i-1} + D_i x + b_i),  i = 2..N
//   f(x) = z_N
//
// f is convex in x whenever W_2..W_N are entrywise non-negative.

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bess/erm.hpp"

namespace bess::icnn {

/// Raised for inconsistent layer shapes or broken weight constraints.
class StructureError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when training produces a non-finite loss.
class TrainingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Layer {
    Eigen::MatrixXd W;  // width x previous width (previous width is 1 for the first layer)
    Eigen::MatrixXd D;  // width x 1; identically zero for the first layer
    Eigen::VectorXd b;  // width

    [[nodiscard]] Eigen::Index width() const noexcept { return b.size(); }
};

class Icnn {
public:
    Icnn() = default;
    /// Checks shapes only; call validate() to also check the convexity constraints.
    explicit Icnn(std::vector<Layer> layers);

    /// Zero-initialised net with the given widths (last width must be 1).
    static Icnn zeros(std::span<const int> widths);

    [[nodiscard]] const std::vector<Layer>& layers() const noexcept { return layers_; }
    [[nodiscard]] std::vector<Layer>& mutable_layers() noexcept { return layers_; }
    [[nodiscard]] std::size_t num_layers() const noexcept { return layers_.size(); }
    [[nodiscard]] std::vector<int> widths() const;
    [[nodiscard]] int total_units() const;

    /// Shape consistency, scalar output, D_1 == 0 and W_2..W_N >= 0.
    void validate() const;
    [[nodiscard]] bool satisfies_invariants() const noexcept;

    [[nodiscard]] double forward(double x) const;

    /// Post-activation values of every layer at x (z_1..z_N).
    [[nodiscard]] std::vector<Eigen::VectorXd> activations(double x) const;

private:
    void check_shapes() const;

    std::vector<Layer> layers_;
};

/// Clamps W_2..W_N at zero from below; D and b are untouched.
Icnn project_nonneg(Icnn net);

enum class Side { charge, discharge };

struct TrainingSet {
    std::vector<double> inputs;   // per-unit power in [0, 1]
    std::vector<double> targets;  // per-unit DC-side energy term

    [[nodiscard]] std::size_t size() const noexcept { return inputs.size(); }
    void validate() const;
};

/// Uniform grid of n points on [0, 1]. Charge targets are eta_c(p) * p,
/// discharge targets p / eta_d(p) with the value at p = 0 taken as 0.
TrainingSet generate_training_data(const BatteryParams& params, Side side, std::size_t n);

struct TrainHyper {
    double learning_rate{1e-3};
    double beta1{0.9};
    double beta2{0.999};
    double epsilon{1e-8};
    int epochs{20000};
    std::uint64_t seed{1};
    int batch_size{0};  // 0 means full batch

    void validate() const;
};

/// Default surrogate architecture: three layers, hidden width 8, scalar output.
inline const std::vector<int> kDefaultWidths{8, 8, 1};

/// Seeded initialisation: W ~ U[0, 0.5], D and b ~ U[-0.5, 0.5], D_1 = 0.
Icnn initialize(std::span<const int> widths, std::uint64_t seed);

/// Flattened parameter vector in layer order (W, D, b per layer, column-major W).
/// D_1 is excluded since it is pinned at zero.
Eigen::VectorXd flatten(const Icnn& net);
Icnn unflatten(const Icnn& shape, const Eigen::VectorXd& theta);

struct LossGradient {
    double loss{0.0};          // mean squared error
    Eigen::VectorXd gradient;  // d loss / d theta, same layout as flatten()
};

/// Reverse-mode gradient of the mean squared error; the ReLU subgradient at 0 is 0.
LossGradient mse_loss_gradient(const Icnn& net, std::span<const double> inputs, std::span<const double> targets);

struct TrainReport {
    double final_loss{0.0};
    double final_rmse{0.0};
    int epochs_run{0};
};

/// Adam on the mean squared error, projecting W_2..W_N onto the non-negative orthant
/// after every update.
Icnn adam_train(const TrainingSet& data, std::span<const int> widths, const TrainHyper& hyper,
                TrainReport* report = nullptr);

double rmse(const Icnn& net, std::span<const double> inputs, std::span<const double> targets);

struct ConvexityReport {
    int pairs{0};
    int violations{0};
    double max_violation{0.0};
};

/// Samples random pairs in [-0.5, 1.5] and checks the midpoint inequality with
/// slack 1e-9.
ConvexityReport check_convexity(const Icnn& net, int n_pairs, std::uint64_t seed);

/// Interval bounds of each layer's pre-activation over x in [lo, hi].
struct PreActivationBounds {
    std::vector<Eigen::VectorXd> lower;
    std::vector<Eigen::VectorXd> upper;
};
PreActivationBounds pre_activation_bounds(const Icnn& net, double lo, double hi);

/// Exact ranges (widened by 1e-9) for a valid ICNN, whose pre-activations are
/// convex in x. Throws StructureError when the convexity constraints fail.
PreActivationBounds pre_activation_ranges(const Icnn& net, double lo, double hi);

// JSON model file: {"widths": [...], "layers": [{"W": [[...]], "D": [[...]], "b": [...]}]}
// Row-major nested arrays, doubles printed with 17 significant digits.
std::string to_json(const Icnn& net);
Icnn from_json(const std::string& text);
void save_model(const Icnn& net, const std::filesystem::path& path);
Icnn load_model(const std::filesystem::path& path);

}  // namespace bess::icnn
