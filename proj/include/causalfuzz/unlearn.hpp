#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "causalfuzz/dataset.hpp"
#include "causalfuzz/predictor.hpp"

namespace causalfuzz {

// Feature-removal unlearning: retrains without the target column. The
// returned predictor's schema excludes the target, so it cannot read it.
std::shared_ptr<LogisticModel> unlearn_feature_removal(const Dataset& data,
                                                       const std::string& target,
                                                       const std::string& outcome,
                                                       const TrainHyper& hyper,
                                                       std::uint64_t seed);

}  // namespace causalfuzz
