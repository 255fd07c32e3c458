#include <doctest.h>

#include <cmath>
#include <set>

#include <bess/formulations.hpp>
#include <bess/timeseries.hpp>

#include "support.hpp"

using namespace bess;
using namespace bess::opt;
using doctest::Approx;

namespace {

const BatteryParams kParams{};

struct Nets {
    icnn::Icnn f, g;
};

const Nets& trained() {
    static const Nets nets = [] {
        icnn::TrainHyper h;
        h.epochs = 5000;
        return Nets{icnn::adam_train(icnn::generate_training_data(kParams, icnn::Side::charge, 256),
                                     icnn::kDefaultWidths, h),
                    icnn::adam_train(icnn::generate_training_data(kParams, icnn::Side::discharge, 256),
                                     icnn::kDefaultWidths, h)};
    }();
    return nets;
}

icnn::Icnn relu_net(double bias = 0.0) {
    icnn::Layer L;
    L.W = Eigen::MatrixXd::Constant(1, 1, 1.0);
    L.D = Eigen::MatrixXd::Zero(1, 1);
    L.b = Eigen::VectorXd::Constant(1, bias);
    return icnn::Icnn({L});
}

UseCase revenue_case(std::vector<double> lmp, double e0 = 0.5) {
    const std::size_t K = lmp.size();
    return UseCase{UseCaseKind::revenue_max, std::move(lmp), K, e0};
}

UseCase smoothing_case(std::vector<double> pv, double e0 = 0.5) {
    const std::size_t K = pv.size() - 1;
    return UseCase{UseCaseKind::pv_smoothing, std::move(pv), K, e0};
}

}  // namespace

TEST_CASE("linear: one step revenue") {
    const auto uc = revenue_case({0.05});
    const auto built = build_linear(uc, kParams);
    const auto sol = solve_qp(built.qp);
    REQUIRE(sol.status == SolveStatus::optimal);
    const auto r = extract_result(sol, built.layout, uc, kParams);
    CHECK(r.schedule.p_d[0] == Approx(1.0).epsilon(1e-6));
    CHECK(r.schedule.p_c[0] == Approx(0.0).epsilon(1e-6));
    CHECK(r.predicted_metric == Approx(0.208333).epsilon(1e-5));
    CHECK(r.predicted_soc[1] == Approx(0.5 - kParams.soc_gain() / 0.95).epsilon(1e-6));
}

TEST_CASE("linear: negative price charges at full power") {
    const auto uc = revenue_case({-0.05});
    const auto built = build_linear(uc, kParams);
    const auto r = extract_result(solve_qp(built.qp), built.layout, uc, kParams);
    CHECK(r.schedule.p_c[0] == Approx(1.0).epsilon(1e-6));
    CHECK(r.schedule.p_d[0] == Approx(0.0).epsilon(1e-6));
}

TEST_CASE("linear: constant pv needs no battery") {
    const auto uc = smoothing_case(std::vector<double>(13, 40.0));
    const auto built = build_linear(uc, kParams);
    const auto sol = solve_qp(built.qp);
    REQUIRE(sol.status == SolveStatus::optimal);
    CHECK(std::abs(sol.objective) <= 1e-9);
    // The optimum is not unique: equal charge and discharge leave the net power flat too.
    const auto r = extract_result(sol, built.layout, uc, kParams);
    for (std::size_t k = 0; k < uc.horizon; ++k) CHECK(std::abs(r.schedule.p_c[k] - r.schedule.p_d[k]) <= 1e-6);
    const std::vector<double> idle(uc.horizon, 0.0);
    CHECK(usecase_objective(uc, kParams, idle, idle) == 0.0);
}

TEST_CASE("use case invariants") {
    CHECK_THROWS_AS(build_linear(UseCase{UseCaseKind::revenue_max, {}, 0, 0.5}, kParams), DomainError);
    CHECK_THROWS_AS(build_linear(UseCase{UseCaseKind::pv_smoothing, {1.0, 2.0}, 2, 0.5}, kParams), DomainError);
    CHECK_THROWS_AS(build_linear(revenue_case({0.05}), kParams, 0.0), DomainError);
    CHECK_THROWS_AS(build_linear(revenue_case({0.05}), kParams, 0.9, 1.2), DomainError);
    CHECK(parse_use_case("revenue") == UseCaseKind::revenue_max);
    CHECK(parse_use_case("pv_smoothing") == UseCaseKind::pv_smoothing);
    CHECK_THROWS_AS(parse_use_case("arbitrage"), DomainError);
    CHECK(default_lambda(UseCaseKind::pv_smoothing) == 1.6e-3);
    CHECK(default_lambda(UseCaseKind::revenue_max) == 4.3e-3);
}

TEST_CASE("two-stage linear repair") {
    for (const auto& uc : {smoothing_case(synth_pv(42, 48)), revenue_case(synth_lmp(42, 48), 0.3)}) {
        DispatchResult stage1;
        const auto r = two_stage_linear_solve(uc, kParams, kDefaultAlpha, {}, kDefaultEtaC, kDefaultEtaD, &stage1);
        REQUIRE_FALSE(r.degraded);
        CHECK(r.objective >= stage1.objective - 1e-7);
        for (std::size_t k = 0; k < uc.horizon; ++k) {
            const double net = stage1.schedule.p_c[k] - stage1.schedule.p_d[k];
            if (net >= kDefaultAlpha) CHECK(r.schedule.p_d[k] == 0.0);
            if (net <= -kDefaultAlpha) CHECK(r.schedule.p_c[k] == 0.0);
        }
    }
}

TEST_CASE("two-stage reproduces a complementary stage one") {
    const auto uc = revenue_case({0.05, 0.01, 0.09});
    DispatchResult stage1;
    const auto r = two_stage_linear_solve(uc, kParams, kDefaultAlpha, {}, kDefaultEtaC, kDefaultEtaD, &stage1);
    for (std::size_t k = 0; k < 3; ++k) REQUIRE(stage1.schedule.p_c[k] * stage1.schedule.p_d[k] == 0.0);
    for (std::size_t k = 0; k < 3; ++k) {
        CHECK(r.schedule.p_c[k] == Approx(stage1.schedule.p_c[k]).epsilon(1e-6));
        CHECK(r.schedule.p_d[k] == Approx(stage1.schedule.p_d[k]).epsilon(1e-6));
    }
    CHECK_THROWS_AS(two_stage_linear_solve(uc, kParams, -1.0), DomainError);
}

TEST_CASE("relaxed: epigraph is tight on a penalized single relu") {
    const auto uc = revenue_case({0.05});
    auto built = build_relaxed_icnn(uc, kParams, relu_net(), relu_net(), 1e-3);
    support::pin(built.qp, built.layout.index("p_c", 0), 0.3);
    const auto sol = solve_qp(built.qp);
    REQUIRE(sol.status == SolveStatus::optimal);
    CHECK(sol.x(built.layout.index("z_c1", 0)) == Approx(0.3).epsilon(1e-6));
    CHECK(sol.x(built.layout.index("z_d1", 0)) ==
          Approx(sol.x(built.layout.index("p_d", 0))).epsilon(1e-6));
    CHECK_THROWS_AS(build_relaxed_icnn(uc, kParams, relu_net(), relu_net(), -1.0), DomainError);
}

TEST_CASE("relaxed: lambda zero leaves slack that the gap measures") {
    const auto& nets = trained();
    const auto uc = revenue_case({0.05});
    const auto built = build_relaxed_icnn(uc, kParams, nets.f, nets.g, 0.0);
    CHECK_NOTHROW(built.qp.validate());
    const auto sol = solve_qp(built.qp);
    REQUIRE(sol.status == SolveStatus::optimal);
    const double gap = feasibility_gap(sol.x, built.layout, nets.f, nets.g);
    CHECK(gap >= -1e-9);
    MESSAGE("lambda = 0, K = 1 revenue gap: " << gap);
}

TEST_CASE("relaxed: constant pv idles at the forward-pass values") {
    const auto& nets = trained();
    const auto uc = smoothing_case(std::vector<double>(13, 40.0));
    const auto built = build_relaxed_icnn(uc, kParams, nets.f, nets.g, 1e-3);
    CHECK_NOTHROW(built.qp.validate());
    const auto sol = solve_qp(built.qp);
    REQUIRE(sol.status == SolveStatus::optimal);
    const auto zc = nets.f.activations(0.0), zd = nets.g.activations(0.0);
    for (std::size_t k = 0; k < uc.horizon; ++k) {
        CHECK(std::abs(sol.x(built.layout.index("p_c", static_cast<int>(k)))) <= 1e-6);
        CHECK(std::abs(sol.x(built.layout.index("p_d", static_cast<int>(k)))) <= 1e-6);
        for (std::size_t i = 0; i < zc.size(); ++i) {
            for (Eigen::Index j = 0; j < zc[i].size(); ++j) {
                const int kk = static_cast<int>(k), jj = static_cast<int>(j);
                CHECK(sol.x(built.layout.index("z_c" + std::to_string(i + 1), kk, jj)) ==
                      Approx(zc[i](j)).epsilon(1e-5));
                CHECK(sol.x(built.layout.index("z_d" + std::to_string(i + 1), kk, jj)) ==
                      Approx(zd[i](j)).epsilon(1e-5));
            }
        }
    }
}

TEST_CASE("feasibility gap definition") {
    const auto& nets = trained();
    const auto uc = revenue_case({0.05, 0.02});
    const auto built = build_relaxed_icnn(uc, kParams, nets.f, nets.g, 1e-3);
    Eigen::VectorXd x = Eigen::VectorXd::Zero(built.layout.size());
    const double pc[2] = {0.4, 0.0}, pd[2] = {0.0, 0.7};
    for (int k = 0; k < 2; ++k) {
        x(built.layout.index("p_c", k)) = pc[k];
        x(built.layout.index("p_d", k)) = pd[k];
        const auto zc = nets.f.activations(pc[k]), zd = nets.g.activations(pd[k]);
        for (std::size_t i = 0; i < zc.size(); ++i) {
            for (Eigen::Index j = 0; j < zc[i].size(); ++j) {
                x(built.layout.index("z_c" + std::to_string(i + 1), k, static_cast<int>(j))) = zc[i](j);
                x(built.layout.index("z_d" + std::to_string(i + 1), k, static_cast<int>(j))) = zd[i](j);
            }
        }
    }
    CHECK(std::abs(feasibility_gap(x, built.layout, nets.f, nets.g)) <= 1e-12);
    x(built.layout.index("z_d3", 1)) += 0.1;
    CHECK(feasibility_gap(x, built.layout, nets.f, nets.g) == Approx(0.1).epsilon(1e-12));
}

TEST_CASE("big-m: selector cases on a single relu") {
    const BigMOptions literal{4.0, false, false};
    SUBCASE("active unit") {
        auto built = build_bigm_icnn(revenue_case({0.05}), kParams, relu_net(), relu_net(), literal);
        support::pin(built.mip.base, built.layout.index("p_c", 0), 0.3);
        const auto sol = solve_miqp(built.mip);
        REQUIRE(sol.status == SolveStatus::optimal);
        CHECK(sol.x(built.layout.index("F_c1", 0)) == Approx(0.3).epsilon(1e-6));
        CHECK(sol.x(built.layout.index("y_c1", 0)) == 0.0);
    }
    SUBCASE("inactive unit") {
        auto built = build_bigm_icnn(revenue_case({0.05}), kParams, relu_net(-0.5), relu_net(), literal);
        support::pin(built.mip.base, built.layout.index("p_c", 0), 0.3);
        const auto sol = solve_miqp(built.mip);
        REQUIRE(sol.status == SolveStatus::optimal);
        CHECK(std::abs(sol.x(built.layout.index("F_c1", 0))) <= 1e-6);
        CHECK(sol.x(built.layout.index("y_c1", 0)) == 1.0);
    }
    SUBCASE("charging selector blocks discharge") {
        auto built = build_bigm_icnn(revenue_case({0.05}), kParams, relu_net(), relu_net(), literal);
        support::pin(built.mip.base, built.layout.index("w", 0), 1.0);
        const auto sol = solve_miqp(built.mip);
        REQUIRE(sol.status == SolveStatus::optimal);
        CHECK(std::abs(sol.x(built.layout.index("p_d", 0))) <= 1e-6);
    }
    CHECK_THROWS_AS(build_bigm_icnn(revenue_case({0.05}), kParams, relu_net(), relu_net(), BigMOptions{0.0}),
                    DomainError);
}

TEST_CASE("big-m: relaxation dominance and audit on a short horizon") {
    const auto& nets = trained();
    for (const auto& uc : {revenue_case(synth_lmp(5, 4)), smoothing_case(synth_pv(5, 4, 100.0, 1.0 / 12.0, 11.0))}) {
        const auto bigm = build_bigm_icnn(uc, kParams, nets.f, nets.g);
        const auto sol = solve_miqp(bigm.mip, MiqpSettings{.heuristic = bigm.heuristic});
        REQUIRE(sol.status == SolveStatus::optimal);
        CHECK(audit_bigm(sol.x, bigm.layout, nets.f, nets.g).ok());
        CHECK(std::abs(feasibility_gap(sol.x, bigm.layout, nets.f, nets.g)) <= 1e-5);

        const auto relaxed = build_relaxed_icnn(uc, kParams, nets.f, nets.g, 0.0);
        const auto rsol = solve_qp(relaxed.qp);
        REQUIRE(rsol.status == SolveStatus::optimal);
        CHECK(rsol.objective <= sol.objective + 1e-4);
    }
}

TEST_CASE("big-m: audit flags a mismatch") {
    const auto& nets = trained();
    const auto uc = revenue_case({0.05, 0.02});
    const auto built = build_bigm_icnn(uc, kParams, nets.f, nets.g);
    const auto sol = solve_miqp(built.mip, MiqpSettings{.heuristic = built.heuristic});
    REQUIRE(sol.status == SolveStatus::optimal);
    Eigen::VectorXd x = sol.x;
    x(built.layout.index("F_c3", 0)) += 0.01;
    const auto audit = audit_bigm(x, built.layout, nets.f, nets.g);
    CHECK_FALSE(audit.ok());
    CHECK(audit.max_mismatch == Approx(0.01).epsilon(1e-6));
}

TEST_CASE("nlp builder") {
    const auto zero = build_nlp(revenue_case({0.0, 0.0}), kParams);
    const std::vector<double> idle(2, 0.0);
    CHECK(zero.objective(idle, idle) == 0.0);
    CHECK(zero.penalized(idle, idle) == 0.0);

    const auto flat = build_nlp(smoothing_case(std::vector<double>(4, 25.0)), kParams);
    const auto res = solve_nlp_multistart(flat);
    CHECK(std::abs(res.objective) <= 1e-9);

    const auto uc = revenue_case({0.04, 0.07});
    const auto nlp = build_nlp(uc, kParams);
    const std::vector<double> pc{0.5, 0.0}, pd{0.0, 0.8};
    CHECK(nlp.objective(pc, pd) == Approx(usecase_objective(uc, kParams, pc, pd)).epsilon(1e-12));
    CHECK(-nlp.objective(pc, pd) == Approx(usecase_metric(uc, kParams, DispatchSchedule(pc, pd))).epsilon(1e-12));
}

TEST_CASE("extract: idle and non-saturating schedules") {
    const auto uc = smoothing_case(synth_pv(3, 24));
    const auto idle = evaluate_schedule(DispatchSchedule::zeros(24), {}, uc, kParams);
    CHECK(idle.predicted_metric == idle.actual_metric);
    CHECK_FALSE(idle.saturated());

    DispatchSchedule s = DispatchSchedule::zeros(24);
    for (std::size_t k = 0; k < 24; k += 3) s.p_c[k] = 0.3;
    for (std::size_t k = 1; k < 24; k += 3) s.p_d[k] = 0.2;
    const auto r = evaluate_schedule(s, {}, uc, kParams);
    CHECK_FALSE(r.saturated());
    CHECK(r.predicted_metric == r.actual_metric);
}

TEST_CASE("extract: solver noise is read as zero") {
    const auto uc = revenue_case({0.05, 0.05});
    const auto built = build_linear(uc, kParams);
    Solution sol;
    sol.status = SolveStatus::optimal;
    sol.x = Eigen::VectorXd::Zero(built.layout.size());
    sol.x(built.layout.index("p_d", 0)) = 1e-9;
    sol.x(built.layout.index("p_c", 1)) = 1.0 + 1e-9;
    const auto r = extract_result(sol, built.layout, uc, kParams);
    CHECK(r.schedule.p_d[0] == 0.0);
    CHECK(r.schedule.p_c[1] == 1.0);
}

TEST_CASE("layout bijection") {
    const auto& nets = trained();
    const auto built = build_bigm_icnn(revenue_case({0.05, 0.02, 0.03}), kParams, nets.f, nets.g);
    const auto& layout = built.layout;
    int expected_offset = 0;
    for (const auto& b : layout.blocks()) {
        CHECK(b.offset == expected_offset);
        expected_offset += b.size();
    }
    CHECK(expected_offset == layout.size());
    CHECK(layout.size() == built.mip.base.num_vars());
    const auto labels = layout.labels();
    CHECK(std::set<std::string>(labels.begin(), labels.end()).size() == labels.size());
    for (int i = 0; i < layout.size(); ++i) {
        CHECK(layout.label(i) == labels[static_cast<std::size_t>(i)]);
        CHECK(layout.find(labels[static_cast<std::size_t>(i)]) == i);
    }
    CHECK_FALSE(layout.find("nonexistent[0]").has_value());
    CHECK_THROWS((void)layout.index("p_c", 3));

    VariableLayout dup;
    dup.add("a", 2);
    CHECK_THROWS(dup.add("a", 1));
}
