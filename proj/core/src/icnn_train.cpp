#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "bess/icnn.hpp"

namespace bess::icnn {

void TrainHyper::validate() const {
    if (!(learning_rate > 0.0)) throw DomainError("learning_rate must be positive");
    if (!(beta1 >= 0.0 && beta1 < 1.0)) throw DomainError("beta1 must lie in [0, 1)");
    if (!(beta2 >= 0.0 && beta2 < 1.0)) throw DomainError("beta2 must lie in [0, 1)");
    if (!(epsilon > 0.0)) throw DomainError("epsilon must be positive");
    if (epochs < 0) throw DomainError("epochs must be non-negative");
    if (batch_size < 0) throw DomainError("batch_size must be non-negative");
}

Icnn initialize(std::span<const int> widths, std::uint64_t seed) {
    Icnn net = Icnn::zeros(widths);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> weight(0.0, 0.5);
    std::uniform_real_distribution<double> offset(-0.5, 0.5);
    auto& layers = net.mutable_layers();
    for (std::size_t i = 0; i < layers.size(); ++i) {
        auto& layer = layers[i];
        for (Eigen::Index c = 0; c < layer.W.cols(); ++c)
            for (Eigen::Index r = 0; r < layer.W.rows(); ++r) layer.W(r, c) = weight(rng);
        if (i > 0)
            for (Eigen::Index r = 0; r < layer.D.rows(); ++r) layer.D(r, 0) = offset(rng);
        for (Eigen::Index r = 0; r < layer.b.size(); ++r) layer.b(r) = offset(rng);
    }
    return net;
}

namespace {

Eigen::Index parameter_count(const Icnn& net) {
    Eigen::Index n = 0;
    const auto& layers = net.layers();
    for (std::size_t i = 0; i < layers.size(); ++i) {
        n += layers[i].W.size() + layers[i].b.size();
        if (i > 0) n += layers[i].D.size();
    }
    return n;
}

}  // namespace

Eigen::VectorXd flatten(const Icnn& net) {
    Eigen::VectorXd theta(parameter_count(net));
    Eigen::Index at = 0;
    const auto& layers = net.layers();
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const auto& layer = layers[i];
        theta.segment(at, layer.W.size()) = layer.W.reshaped();
        at += layer.W.size();
        if (i > 0) {
            theta.segment(at, layer.D.size()) = layer.D.reshaped();
            at += layer.D.size();
        }
        theta.segment(at, layer.b.size()) = layer.b;
        at += layer.b.size();
    }
    return theta;
}

Icnn unflatten(const Icnn& shape, const Eigen::VectorXd& theta) {
    if (theta.size() != parameter_count(shape)) throw StructureError("parameter vector has the wrong length");
    Icnn net = shape;
    Eigen::Index at = 0;
    auto& layers = net.mutable_layers();
    for (std::size_t i = 0; i < layers.size(); ++i) {
        auto& layer = layers[i];
        layer.W.reshaped() = theta.segment(at, layer.W.size());
        at += layer.W.size();
        if (i > 0) {
            layer.D.reshaped() = theta.segment(at, layer.D.size());
            at += layer.D.size();
        } else {
            layer.D.setZero();
        }
        layer.b = theta.segment(at, layer.b.size());
        at += layer.b.size();
    }
    return net;
}

LossGradient mse_loss_gradient(const Icnn& net, std::span<const double> inputs, std::span<const double> targets) {
    if (inputs.size() != targets.size() || inputs.empty()) {
        throw StructureError("loss needs equal-length, non-empty inputs and targets");
    }
    const auto& layers = net.layers();
    const Eigen::Index n = static_cast<Eigen::Index>(inputs.size());
    const Eigen::RowVectorXd x = Eigen::Map<const Eigen::RowVectorXd>(inputs.data(), n);
    const Eigen::RowVectorXd t = Eigen::Map<const Eigen::RowVectorXd>(targets.data(), n);

    // Batched forward pass; column j holds sample j.
    std::vector<Eigen::MatrixXd> pre(layers.size());
    std::vector<Eigen::MatrixXd> post(layers.size());
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const auto& layer = layers[i];
        if (i == 0) {
            pre[i] = layer.W.col(0) * x;
        } else {
            pre[i] = layer.W * post[i - 1] + layer.D.col(0) * x;
        }
        pre[i].colwise() += layer.b;
        post[i] = pre[i].cwiseMax(0.0);
    }

    const Eigen::RowVectorXd residual = post.back().row(0) - t;
    LossGradient out;
    out.loss = residual.squaredNorm() / static_cast<double>(n);

    // Gradients per layer, assembled afterwards in flatten() order.
    std::vector<Eigen::MatrixXd> dW(layers.size());
    std::vector<Eigen::VectorXd> dD(layers.size());
    std::vector<Eigen::VectorXd> db(layers.size());
    Eigen::MatrixXd upstream = (2.0 / static_cast<double>(n)) * residual;
    for (std::size_t idx = layers.size(); idx-- > 0;) {
        const Eigen::MatrixXd delta = upstream.cwiseProduct((pre[idx].array() > 0.0).cast<double>().matrix());
        if (idx == 0) {
            dW[idx] = delta * x.transpose();
        } else {
            dW[idx] = delta * post[idx - 1].transpose();
            dD[idx] = delta * x.transpose();
            upstream = layers[idx].W.transpose() * delta;
        }
        db[idx] = delta.rowwise().sum();
    }

    out.gradient.resize(parameter_count(net));
    Eigen::Index at = 0;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        out.gradient.segment(at, dW[i].size()) = dW[i].reshaped();
        at += dW[i].size();
        if (i > 0) {
            out.gradient.segment(at, dD[i].size()) = dD[i];
            at += dD[i].size();
        }
        out.gradient.segment(at, db[i].size()) = db[i];
        at += db[i].size();
    }
    return out;
}

Icnn adam_train(const TrainingSet& data, std::span<const int> widths, const TrainHyper& hyper, TrainReport* report) {
    data.validate();
    hyper.validate();
    if (data.size() == 0) throw TrainingError("training set is empty");

    Icnn net = project_nonneg(initialize(widths, hyper.seed));
    Eigen::VectorXd theta = flatten(net);
    Eigen::VectorXd m = Eigen::VectorXd::Zero(theta.size());
    Eigen::VectorXd v = Eigen::VectorXd::Zero(theta.size());

    const std::size_t n = data.size();
    const std::size_t batch =
        hyper.batch_size <= 0 ? n : std::min<std::size_t>(static_cast<std::size_t>(hyper.batch_size), n);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 shuffle_rng(hyper.seed ^ 0x9e3779b97f4a7c15ULL);
    std::vector<double> batch_x(batch);
    std::vector<double> batch_t(batch);

    double beta1_pow = 1.0;
    double beta2_pow = 1.0;
    for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
        if (batch < n) std::shuffle(order.begin(), order.end(), shuffle_rng);
        for (std::size_t start = 0; start < n; start += batch) {
            const std::size_t count = std::min(batch, n - start);
            std::span<const double> xs(data.inputs);
            std::span<const double> ts(data.targets);
            if (batch < n) {
                for (std::size_t j = 0; j < count; ++j) {
                    batch_x[j] = data.inputs[order[start + j]];
                    batch_t[j] = data.targets[order[start + j]];
                }
                xs = std::span<const double>(batch_x.data(), count);
                ts = std::span<const double>(batch_t.data(), count);
            }
            const LossGradient lg = mse_loss_gradient(net, xs, ts);
            if (!std::isfinite(lg.loss) || !lg.gradient.allFinite()) {
                throw TrainingError("non-finite loss at epoch " + std::to_string(epoch) +
                                    " (loss = " + std::to_string(lg.loss) + ")");
            }
            beta1_pow *= hyper.beta1;
            beta2_pow *= hyper.beta2;
            m = hyper.beta1 * m + (1.0 - hyper.beta1) * lg.gradient;
            v = hyper.beta2 * v + (1.0 - hyper.beta2) * lg.gradient.cwiseAbs2();
            const Eigen::VectorXd m_hat = m / (1.0 - beta1_pow);
            const Eigen::VectorXd v_hat = v / (1.0 - beta2_pow);
            theta -= hyper.learning_rate * m_hat.cwiseQuotient((v_hat.cwiseSqrt().array() + hyper.epsilon).matrix());
            net = project_nonneg(unflatten(net, theta));
            theta = flatten(net);
        }
    }

    if (report != nullptr) {
        report->final_rmse = rmse(net, data.inputs, data.targets);
        report->final_loss = report->final_rmse * report->final_rmse;
        report->epochs_run = hyper.epochs;
    }
    return net;
}

}  // namespace bess::icnn
