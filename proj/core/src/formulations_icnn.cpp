#include <algorithm>
#include <cmath>

#include "bess/formulations.hpp"
#include "skeleton.hpp"

namespace bess {

namespace {

struct SideSpec {
    const icnn::Icnn* net;
    std::string tag;  // "c" or "d"
    int power;        // offset of the p_c or p_d block
};

std::string unit_block(const std::string& prefix, const std::string& tag, std::size_t layer) {
    return prefix + tag + std::to_string(layer + 1);
}

void check_net(const icnn::Icnn& net, const char* which) {
    try {
        net.validate();
    } catch (const icnn::StructureError& e) {
        throw DomainError(std::string(which) + " surrogate: " + e.what());
    }
}

// Terms of W_i z_{i-1}[k] + D_i p[k] for unit j, negated, plus the unit itself.
std::vector<detail::Term> affine_terms(const VariableLayout& layout, const SideSpec& side, const std::string& prefix,
                                       std::size_t i, int k, int j) {
    const icnn::Layer& L = side.net->layers()[i];
    std::vector<detail::Term> terms{{layout.index(unit_block(prefix, side.tag, i), k, j), 1.0}};
    if (i == 0) {
        terms.emplace_back(side.power + k, -L.W(j, 0));
        return terms;
    }
    const std::string prev = unit_block(prefix, side.tag, i - 1);
    for (Eigen::Index l = 0; l < L.W.cols(); ++l) {
        terms.emplace_back(layout.index(prev, k, static_cast<int>(l)), -L.W(j, l));
    }
    terms.emplace_back(side.power + k, -L.D(j, 0));
    return terms;
}

std::string layout_prefix(const VariableLayout& layout) {
    if (layout.has("z_c1")) return "z_";
    if (layout.has("F_c1")) return "F_";
    throw DomainError("layout has no surrogate unit blocks");
}

double read_power(const Eigen::VectorXd& x, int index) { return std::clamp(x(index), 0.0, 1.0); }

}  // namespace

BuiltQp build_relaxed_icnn(const UseCase& uc, const BatteryParams& params, const icnn::Icnn& f_net,
                           const icnn::Icnn& g_net, double lambda) {
    uc.validate(params);
    if (!(lambda >= 0.0)) throw DomainError("lambda must be nonnegative");
    check_net(f_net, "charge");
    check_net(g_net, "discharge");

    BuiltQp out;
    const int K = static_cast<int>(uc.horizon);
    const auto s = detail::add_power_blocks(out.layout, K);
    const std::vector<SideSpec> sides{{&f_net, "c", s.pc}, {&g_net, "d", s.pd}};
    for (const auto& side : sides)
        for (std::size_t i = 0; i < side.net->num_layers(); ++i)
            out.layout.add(unit_block("z_", side.tag, i), K, static_cast<int>(side.net->layers()[i].width()));

    detail::QpAssembler qp(out.layout.size());
    detail::add_box_rows(qp, s, uc, params, true);
    const std::string zc_last = unit_block("z_", "c", f_net.num_layers() - 1);
    const std::string zd_last = unit_block("z_", "d", g_net.num_layers() - 1);
    detail::add_dynamics(qp, s, params, [&](int k) {
        return std::vector<detail::Term>{{out.layout.index(zc_last, k), 1.0}, {out.layout.index(zd_last, k), -1.0}};
    });
    for (const auto& side : sides) {
        for (std::size_t i = 0; i < side.net->num_layers(); ++i) {
            const icnn::Layer& L = side.net->layers()[i];
            const std::string name = unit_block("z_", side.tag, i);
            for (int k = 0; k < K; ++k) {
                for (int j = 0; j < static_cast<int>(L.width()); ++j) {
                    const int z = out.layout.index(name, k, j);
                    qp.bound(z, 0.0, opt::kInf);
                    qp.row(affine_terms(out.layout, side, "z_", i, k, j), L.b(j), opt::kInf);
                    qp.linear(z, lambda);
                }
            }
        }
    }
    detail::add_objective(qp, s, uc, params);
    out.qp = qp.finish(out.layout.labels());
    return out;
}

BuiltMiqp build_bigm_icnn(const UseCase& uc, const BatteryParams& params, const icnn::Icnn& f_net,
                          const icnn::Icnn& g_net, const BigMOptions& options) {
    uc.validate(params);
    if (!(options.M > 0.0)) throw DomainError("M must be positive");
    check_net(f_net, "charge");
    check_net(g_net, "discharge");

    BuiltMiqp out;
    const int K = static_cast<int>(uc.horizon);
    const double M = options.M;
    const auto s = detail::add_power_blocks(out.layout, K);
    const std::vector<SideSpec> sides{{&f_net, "c", s.pc}, {&g_net, "d", s.pd}};
    for (const auto& side : sides)
        for (std::size_t i = 0; i < side.net->num_layers(); ++i)
            out.layout.add(unit_block("F_", side.tag, i), K, static_cast<int>(side.net->layers()[i].width()));
    for (const auto& side : sides)
        for (std::size_t i = 0; i < side.net->num_layers(); ++i)
            out.layout.add(unit_block("y_", side.tag, i), K, static_cast<int>(side.net->layers()[i].width()));
    const int w0 = out.layout.add("w", K);

    detail::QpAssembler qp(out.layout.size());
    detail::add_box_rows(qp, s, uc, params, false);
    const std::string fc_last = unit_block("F_", "c", f_net.num_layers() - 1);
    const std::string fd_last = unit_block("F_", "d", g_net.num_layers() - 1);
    detail::add_dynamics(qp, s, params, [&](int k) {
        return std::vector<detail::Term>{{out.layout.index(fc_last, k), 1.0}, {out.layout.index(fd_last, k), -1.0}};
    });

    for (const auto& side : sides) {
        const auto bounds = icnn::pre_activation_ranges(*side.net, 0.0, 1.0);
        for (std::size_t i = 0; i < side.net->num_layers(); ++i) {
            const icnn::Layer& L = side.net->layers()[i];
            const std::string fname = unit_block("F_", side.tag, i);
            const std::string yname = unit_block("y_", side.tag, i);
            for (int k = 0; k < K; ++k) {
                for (int j = 0; j < static_cast<int>(L.width()); ++j) {
                    const int F = out.layout.index(fname, k, j);
                    const int y = out.layout.index(yname, k, j);
                    auto aff = affine_terms(out.layout, side, "F_", i, k, j);
                    double m_on = M, m_off = M;
                    if (options.tighten) {
                        m_on = std::min(M, std::max(bounds.upper[i](j), 0.0));
                        m_off = std::min(M, std::max(-bounds.lower[i](j), 0.0));
                    }
                    qp.bound(F, 0.0, opt::kInf);
                    qp.row(aff, L.b(j), opt::kInf);
                    qp.row({{F, 1.0}, {y, m_on}}, -opt::kInf, m_on);
                    aff.emplace_back(y, -m_off);
                    qp.row(aff, -opt::kInf, L.b(j));

                    double y_lo = 0.0, y_hi = 1.0;
                    if (options.fix_stable_units) {
                        if (bounds.upper[i](j) <= 0.0) y_lo = 1.0;
                        else if (bounds.lower[i](j) >= 0.0) y_hi = 0.0;
                    }
                    qp.bound(y, y_lo, y_hi);
                }
            }
        }
    }
    for (int k = 0; k < K; ++k) {
        qp.bound(w0 + k, 0.0, 1.0);
        qp.row({{s.pc + k, 1.0}, {w0 + k, -1.0}}, -opt::kInf, 0.0);
        qp.row({{s.pd + k, 1.0}, {w0 + k, 1.0}}, -opt::kInf, 1.0);
    }
    detail::add_objective(qp, s, uc, params);
    out.mip.base = qp.finish(out.layout.labels());

    for (const auto& side : sides) {
        for (std::size_t i = 0; i < side.net->num_layers(); ++i) {
            const auto& b = out.layout.block(unit_block("y_", side.tag, i));
            for (int v = 0; v < b.size(); ++v) out.mip.binary_indices.push_back(b.offset + v);
        }
    }
    for (int k = 0; k < K; ++k) out.mip.binary_indices.push_back(w0 + k);

    // Dominant flow per step, cut back along the surrogate SoC model until the
    // trajectory stays in the box; unit states from the forward pass there.
    out.heuristic = [f = f_net, g = g_net, s, K, gain = params.soc_gain(), lo = params.e_min_frac,
                     hi = params.e_max_frac, e0 = uc.e0](const Eigen::VectorXd& x) -> std::optional<std::vector<double>> {
        auto next = [&](double e, double pc, double pd) { return e + gain * (f.forward(pc) - g.forward(pd)); };
        auto inside = [&](double e) { return e >= lo && e <= hi; };
        // Largest p in [0, p0] with ok(p), assuming ok(0).
        auto shrink = [](double p0, const auto& ok) {
            if (ok(p0)) return p0;
            double a = 0.0, b = p0;
            for (int it = 0; it < 60; ++it) {
                const double mid = 0.5 * (a + b);
                (ok(mid) ? a : b) = mid;
            }
            return a;
        };
        std::vector<double> pc(static_cast<std::size_t>(K)), pd(pc.size()), w(pc.size());
        double e = e0;
        for (int k = 0; k < K; ++k) {
            const auto ku = static_cast<std::size_t>(k);
            double c = read_power(x, s.pc + k), d = read_power(x, s.pd + k);
            (c >= d ? d : c) = 0.0;
            if (!inside(next(e, 0.0, 0.0))) {
                // Idle drains below the floor; charge the least amount that recovers it.
                if (!inside(next(e, 1.0, 0.0))) return std::nullopt;
                double a = 0.0, b = 1.0;
                for (int it = 0; it < 60; ++it) {
                    const double mid = 0.5 * (a + b);
                    (inside(next(e, mid, 0.0)) ? b : a) = mid;
                }
                c = b;
                d = 0.0;
            } else if (c > 0.0) {
                c = shrink(c, [&](double p) { return inside(next(e, p, 0.0)); });
            } else {
                d = shrink(d, [&](double p) { return inside(next(e, 0.0, p)); });
            }
            pc[ku] = c;
            pd[ku] = d;
            w[ku] = c >= d ? 1.0 : 0.0;
            e = next(e, c, d);
        }
        std::vector<double> out;
        for (int side = 0; side < 2; ++side) {
            const icnn::Icnn& net = side == 0 ? f : g;
            const auto& power = side == 0 ? pc : pd;
            std::vector<std::vector<Eigen::VectorXd>> acts(static_cast<std::size_t>(K));
            for (std::size_t k = 0; k < acts.size(); ++k) acts[k] = net.activations(power[k]);
            for (std::size_t i = 0; i < net.num_layers(); ++i)
                for (const auto& a : acts)
                    for (Eigen::Index j = 0; j < a[i].size(); ++j) out.push_back(a[i](j) > 0.0 ? 0.0 : 1.0);
        }
        out.insert(out.end(), w.begin(), w.end());
        return out;
    };
    return out;
}

double feasibility_gap(const Eigen::VectorXd& x, const VariableLayout& layout, const icnn::Icnn& f_net,
                       const icnn::Icnn& g_net) {
    const std::string prefix = layout_prefix(layout);
    const auto& pc = layout.block("p_c");
    const auto& pd = layout.block("p_d");
    const std::vector<SideSpec> sides{{&f_net, "c", pc.offset}, {&g_net, "d", pd.offset}};
    double gap = 0.0;
    for (const auto& side : sides) {
        for (std::size_t i = 0; i < side.net->num_layers(); ++i) {
            const icnn::Layer& L = side.net->layers()[i];
            const std::string name = unit_block(prefix, side.tag, i);
            for (int k = 0; k < pc.steps; ++k) {
                const double p = x(side.power + k);
                Eigen::VectorXd pre = L.b + L.D.col(0) * p;
                if (i == 0) {
                    pre += L.W.col(0) * p;
                } else {
                    const auto& prev = layout.block(unit_block(prefix, side.tag, i - 1));
                    pre += L.W * x.segment(prev.offset + k * prev.width, prev.width);
                }
                for (Eigen::Index j = 0; j < pre.size(); ++j) {
                    gap += x(layout.index(name, k, static_cast<int>(j))) - std::max(0.0, pre(j));
                }
            }
        }
    }
    return gap;
}

BigMAudit audit_bigm(const Eigen::VectorXd& x, const VariableLayout& layout, const icnn::Icnn& f_net,
                     const icnn::Icnn& g_net, double tol) {
    BigMAudit audit;
    const auto& pc = layout.block("p_c");
    const auto& pd = layout.block("p_d");
    const std::vector<SideSpec> sides{{&f_net, "c", pc.offset}, {&g_net, "d", pd.offset}};
    for (const auto& side : sides) {
        for (int k = 0; k < pc.steps; ++k) {
            const auto acts = side.net->activations(read_power(x, side.power + k));
            for (std::size_t i = 0; i < acts.size(); ++i) {
                const std::string name = unit_block("F_", side.tag, i);
                for (Eigen::Index j = 0; j < acts[i].size(); ++j) {
                    const double diff = std::abs(x(layout.index(name, k, static_cast<int>(j))) - acts[i](j));
                    audit.max_mismatch = std::max(audit.max_mismatch, diff);
                    if (diff > tol) ++audit.mismatches;
                }
            }
        }
    }
    return audit;
}

}  // namespace bess
