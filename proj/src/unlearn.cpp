#include "causalfuzz/unlearn.hpp"

#include "causalfuzz/errors.hpp"

namespace causalfuzz {

std::shared_ptr<LogisticModel> unlearn_feature_removal(const Dataset& data,
                                                       const std::string& target,
                                                       const std::string& outcome,
                                                       const TrainHyper& hyper,
                                                       std::uint64_t seed) {
    if (!data.has_column(target)) {
        throw ConfigError("unlearn: target column absent: " + target);
    }
    if (target == outcome) {
        throw ConfigError("unlearn: target must be a feature column, not the outcome");
    }
    std::vector<std::string> features;
    for (const auto& col : data.schema) {
        if (col.name != target && col.name != outcome) features.push_back(col.name);
    }
    if (features.empty()) {
        throw ConfigError("unlearn: no features remain after removing " + target);
    }
    return train_builtin(data, outcome, features, hyper, seed);
}

}  // namespace causalfuzz
