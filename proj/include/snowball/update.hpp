#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "snowball/layered_vector.hpp"

namespace snowball {

using ClientId = std::size_t;

// What a defense is allowed to see of a submitted update.
struct CandidateUpdate {
  ClientId client_id = 0;
  LayeredVector delta;  // trained local parameters minus the round's global parameters
  std::size_t n_samples = 0;
};

// A submitted update as the simulator records it, including the ground-truth
// infection flag used only for evaluation and the Ideal oracle.
struct ModelUpdate {
  ClientId client_id = 0;
  LayeredVector delta;
  std::size_t n_samples = 0;
  bool infected = false;
};

std::vector<CandidateUpdate> strip_ground_truth(std::span<const ModelUpdate> updates);

}  // namespace snowball
