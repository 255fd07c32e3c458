#include <benchmark/benchmark.h>

#include <random>

#include <bess/formulations.hpp>
#include <bess/icnn.hpp>
#include <bess/timeseries.hpp>

using namespace bess;

namespace {

struct Nets {
    icnn::Icnn f, g;
};

const Nets& nets() {
    static const Nets n = [] {
        const BatteryParams battery;
        icnn::TrainHyper hyper;
        hyper.epochs = 5000;
        Nets out;
        out.f = icnn::adam_train(icnn::generate_training_data(battery, icnn::Side::charge, 256), icnn::kDefaultWidths,
                                 hyper);
        out.g = icnn::adam_train(icnn::generate_training_data(battery, icnn::Side::discharge, 256),
                                 icnn::kDefaultWidths, hyper);
        return out;
    }();
    return n;
}

UseCase scenario(UseCaseKind kind, std::size_t K) {
    UseCase uc;
    uc.kind = kind;
    uc.horizon = K;
    uc.data = kind == UseCaseKind::pv_smoothing ? synth_pv(42, K) : synth_lmp(42, K);
    return uc;
}

}  // namespace

static void BM_Forward(benchmark::State& state) {
    const auto& net = nets().f;
    double x = 0.0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(net.forward(x));
        x = x > 1.0 ? 0.0 : x + 1e-3;
    }
}
BENCHMARK(BM_Forward);

static void BM_LossGradient(benchmark::State& state) {
    const auto data = icnn::generate_training_data(BatteryParams{}, icnn::Side::charge, 256);
    const auto net = icnn::initialize(icnn::kDefaultWidths, 1);
    for (auto _ : state) benchmark::DoNotOptimize(icnn::mse_loss_gradient(net, data.inputs, data.targets));
}
BENCHMARK(BM_LossGradient);

static void BM_Train1000Epochs(benchmark::State& state) {
    const auto data = icnn::generate_training_data(BatteryParams{}, icnn::Side::discharge, 256);
    icnn::TrainHyper hyper;
    hyper.epochs = 1000;
    for (auto _ : state) benchmark::DoNotOptimize(icnn::adam_train(data, icnn::kDefaultWidths, hyper));
}
BENCHMARK(BM_Train1000Epochs)->Unit(benchmark::kMillisecond);

static void BM_LinearTwoStage(benchmark::State& state) {
    const auto uc = scenario(UseCaseKind::revenue_max, static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(two_stage_linear_solve(uc, BatteryParams{}));
}
BENCHMARK(BM_LinearTwoStage)->Arg(48)->Arg(192)->Unit(benchmark::kMillisecond);

static void BM_RelaxedSmoothing(benchmark::State& state) {
    const auto uc = scenario(UseCaseKind::pv_smoothing, static_cast<std::size_t>(state.range(0)));
    const auto built = build_relaxed_icnn(uc, BatteryParams{}, nets().f, nets().g, default_lambda(uc.kind));
    for (auto _ : state) benchmark::DoNotOptimize(opt::solve_qp(built.qp));
}
BENCHMARK(BM_RelaxedSmoothing)->Arg(48)->Arg(192)->Unit(benchmark::kMillisecond);

static void BM_RelaxedRevenue(benchmark::State& state) {
    const auto uc = scenario(UseCaseKind::revenue_max, static_cast<std::size_t>(state.range(0)));
    const auto built = build_relaxed_icnn(uc, BatteryParams{}, nets().f, nets().g, default_lambda(uc.kind));
    for (auto _ : state) benchmark::DoNotOptimize(opt::solve_qp(built.qp));
}
BENCHMARK(BM_RelaxedRevenue)->Arg(48)->Arg(192)->Unit(benchmark::kMillisecond);

static void BM_BigMRevenue12(benchmark::State& state) {
    const auto uc = scenario(UseCaseKind::revenue_max, 12);
    const auto built = build_bigm_icnn(uc, BatteryParams{}, nets().f, nets().g);
    opt::MiqpSettings s;
    s.heuristic = built.heuristic;
    for (auto _ : state) benchmark::DoNotOptimize(opt::solve_miqp(built.mip, s));
}
BENCHMARK(BM_BigMRevenue12)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
