#include "bregdiag/model.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace bregdiag {

void check_index_set(const std::vector<int>& indices, int n) {
  for (int i : indices)
    if (i < 1 || i > n)
      throw std::out_of_range("perturbation index " + std::to_string(i) + " outside [1, " +
                              std::to_string(n) + "]");
  std::vector<int> sorted = indices;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw std::invalid_argument("perturbation indices must be distinct");
}

void TargetModel::check_obs_index(int i) const {
  if (i < first_scored_obs() || i > n_obs())
    throw std::out_of_range("per_obs_loglik: observation index " + std::to_string(i) +
                            " outside [" + std::to_string(first_scored_obs()) + ", " +
                            std::to_string(n_obs()) + "]");
}

void TargetModel::check_deletion(const PerturbationScheme& scheme) const {
  check_index_set(scheme.indices, n_obs());
}

}  // namespace bregdiag
