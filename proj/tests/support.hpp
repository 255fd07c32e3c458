#pragma once

#include <bess/qp.hpp>

#include "oracles.hpp"

namespace support {

inline bess::opt::QuadraticProgram to_qp(const oracle::DenseQp& p) {
    bess::opt::QuadraticProgram qp;
    qp.Q = p.Q.sparseView();
    qp.c = p.c;
    qp.A = p.A.sparseView();
    qp.l = p.l;
    qp.u = p.u;
    return qp;
}

// Appends the row lo <= x[index] <= hi.
inline void pin(bess::opt::QuadraticProgram& qp, int index, double lo, double hi) {
    std::vector<bess::opt::Triplet> trip;
    for (int k = 0; k < qp.A.outerSize(); ++k)
        for (bess::opt::SparseMatrix::InnerIterator it(qp.A, k); it; ++it)
            trip.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
    const auto m = qp.A.rows();
    trip.emplace_back(static_cast<int>(m), index, 1.0);
    qp.A = bess::opt::make_sparse(m + 1, qp.A.cols(), trip);
    qp.l.conservativeResize(m + 1);
    qp.u.conservativeResize(m + 1);
    qp.l(m) = lo;
    qp.u(m) = hi;
}

inline void pin(bess::opt::QuadraticProgram& qp, int index, double value) { pin(qp, index, value, value); }

}  // namespace support
