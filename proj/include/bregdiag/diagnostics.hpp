#pragma once

#include <vector>

#include "bregdiag/types.hpp"

namespace bregdiag {

/// Split-Rhat over chain halves for one scalar sequence per chain. Each
/// column of `chains_draws[c]` is a parameter; callers pass one coordinate.
/// Returns NaN when fewer than 2 chains or fewer than 4 draws per chain.
double split_rhat(const std::vector<Vector>& chain_draws);

/// Effective sample size via initial monotone positive-pair autocorrelation
/// truncation (Geyer), computed on split chains.
double effective_sample_size(const std::vector<Vector>& chain_draws);

}  // namespace bregdiag
