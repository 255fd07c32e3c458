#pragma once

// Pieces shared by every QP-based builder: power and SoC blocks, their bounds,
// the initial-SoC row and the use-case objective.

#include <functional>

#include "assembler.hpp"
#include "bess/formulations.hpp"

namespace bess::detail {

struct Skeleton {
    int K{0};
    int pc{0};  // offsets of the p_c, p_d and e blocks
    int pd{0};
    int e{0};
};

Skeleton add_power_blocks(VariableLayout& layout, int K);

/// e[0] = e0, e[1..K] within SoC bounds, powers in [0, 1], optional p_c + p_d <= 1.
void add_box_rows(QpAssembler& qp, const Skeleton& s, const UseCase& uc, const BatteryParams& params, bool cut);

/// e[k+1] - e[k] - gain * sum(energy terms of step k) = 0 for every k.
void add_dynamics(QpAssembler& qp, const Skeleton& s, const BatteryParams& params,
                  const std::function<std::vector<Term>(int k)>& energy_terms);

void add_objective(QpAssembler& qp, const Skeleton& s, const UseCase& uc, const BatteryParams& params);

}  // namespace bess::detail
