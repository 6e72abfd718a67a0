#pragma once

#include "rsreg/relaxation.hpp"

namespace rsreg::detail {

/// Number of reduced monomials in (v, s) of degree at most ell.
Index full_sos_basis_size(Index d, int ell);

PseudoExpectation solve_full_sos(const Matrix& rows, const Vector& w, int t, const ElasticSystem& sys,
                                 const RelaxationBackend& backend, const SolveOptions& opts);

}  // namespace rsreg::detail
