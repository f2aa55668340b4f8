#pragma once

#include <cstdint>
#include <unordered_set>

#include "sigdet/cohort.hpp"

namespace sigdet {

// Labeled pair sets used exclusively by evaluation, never by the rating
// pipeline. Keys are pair_key(drug_id, condition_id).
struct GroundTruth {
    std::unordered_set<uint64_t> positives;
    std::unordered_set<uint64_t> negatives;

    bool is_positive(int32_t drug_id, int32_t condition_id) const {
        return positives.count(pair_key(drug_id, condition_id)) != 0;
    }
};

}  // namespace sigdet
