#pragma once

#include <cstdint>
#include <string>

#include "sigdet/cohort.hpp"
#include "sigdet/truth.hpp"

namespace sigdet {

// Synthetic cohort recipe: homogeneous background event processes plus a
// set of "spiked" drug->condition pairs whose exposures cause lagged
// occurrences of the paired condition.
struct GenConfig {
    int64_t n_patients = 1000;
    int32_t n_drugs = 50;
    int32_t n_conditions = 40;
    int32_t years = 10;
    double drug_rate = 2.0;        // mean prescriptions per patient per year
    double cond_rate = 5.0;        // mean background conditions per patient per year
    double era_length_days = 30.0; // mean era duration, geometric, min 1 day
    int32_t n_spiked = 10;
    double effect_prob = 0.5;      // P(exposure to a spiked drug causes its condition)
    int32_t lag_min_days = 3;
    int32_t lag_max_days = 20;
    uint64_t seed = 1;

    TimeAxis axis() const { return TimeAxis{years * 365, 365}; }
    void check() const;  // throws ConfigError
};

struct GenResult {
    Cohort cohort;
    GroundTruth truth;
    uint64_t injected_occurrences = 0;
};

// Deterministic for a fixed seed: each patient draws from a private stream
// keyed by (seed, patient_id), so results do not depend on generation order.
GenResult generate(const GenConfig& config);

// Emits patients.csv, drug_eras.csv, conditions.csv and truth.csv into out_dir.
void write_cohort(const Cohort& cohort, const GroundTruth& truth, const std::string& out_dir);

}  // namespace sigdet
