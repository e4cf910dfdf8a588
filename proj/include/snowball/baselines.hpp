#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "snowball/update.hpp"

namespace snowball {

struct SelectionResult {
  std::vector<ClientId> selected;  // ascending client id
  std::vector<double> scores;      // per input update; Krum distance score, 0 otherwise
};

// No defense: every update is aggregated.
SelectionResult fedavg_select(std::span<const CandidateUpdate> updates);

/// Multi-Krum. With f = ceil(f_ratio * n), each update is scored by the sum of
/// squared distances (over the full flattened vector) to its n - f - 2 nearest
/// other updates; the m lowest scores are kept (ties go to the lower id).
SelectionResult krum_select(std::span<const CandidateUpdate> updates, double f_ratio, std::size_t m);

// Oracle that drops exactly the infected updates. Needs ground truth, so it is
// only reachable from the evaluation harness.
SelectionResult ideal_select(std::span<const ModelUpdate> updates);

}  // namespace snowball
