#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sigdet/cohort.hpp"
#include "sigdet/kernel.hpp"
#include "sigdet/rating.hpp"

namespace sigdet {

struct BagConfig {
    int32_t k = 100;               // replicate count
    double inclusion_prob = 0.65;  // per-patient Bernoulli inclusion
    int32_t delta_min = 40;        // window width drawn uniformly from
    int32_t delta_max = 60;        //   integers [delta_min, delta_max]
    uint64_t seed = 0;

    void check() const;  // throws ConfigError
};

struct EnsembleConfig {
    double tau = 0.3;  // weight of the scale-adjusted DPA1 side

    void check() const;  // throws ConfigError
};

struct ReplicateInfo {
    int32_t j = 0;  // 1-based replicate index
    int32_t delta = 0;
    uint64_t omega_size = 0;  // patients included
    bool skipped = false;     // empty subset, excluded from the average
    double wall_ms = 0.0;
};

struct BagResult {
    // One per-year matrix list z^(1..m) per rating config passed in.
    std::vector<std::vector<RatingMatrix>> z_per_config;
    std::vector<ReplicateInfo> replicates;
    int32_t k_effective = 0;
};

// Bagging: k replicates, each on a random patient subset (independent
// Bernoulli inclusion, gamma <= inclusion_prob) and a random window width,
// run through count -> rate -> cumulate and averaged in replicate order.
// Replicate j's randomness derives from (seed, j[, patient_id]), so any
// replicate is reproducible in isolation and scheduling cannot change the
// result. All rating configs share each replicate's counting pass.
BagResult bag_many(const Cohort& cohort,
                   const std::vector<RatingConfig>& rating_configs,
                   const BagConfig& bag_config,
                   int32_t m,
                   const std::optional<KernelShape>& kernel,
                   bool first_era_only,
                   const ScopePtr& scope,
                   int workers = 1);

// Single-estimator convenience wrapper.
std::vector<RatingMatrix> bag(const Cohort& cohort,
                              const RatingConfig& rating_config,
                              const BagConfig& bag_config,
                              int32_t m,
                              const std::optional<KernelShape>& kernel,
                              bool first_era_only,
                              const ScopePtr& scope,
                              int workers = 1);

// Rank-preserving quantile mapping: the pair holding source rank t receives
// the score found at target rank t. Keys missing from one side enter the
// ranking with score 0.
RatingMatrix scale_adjust(const RatingMatrix& source, const RatingMatrix& target);

// ENS = tau * scale_adjust(dpa1, dpa2) + (1 - tau) * dpa2, absent keys 0.
RatingMatrix fuse(const RatingMatrix& dpa1, const RatingMatrix& dpa2,
                  const EnsembleConfig& config);

// CSV: j,delta,omega_size,skipped,wall_ms
void write_run_report(const std::vector<ReplicateInfo>& replicates, const std::string& path);

}  // namespace sigdet
