#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "sigdet/cohort.hpp"
#include "sigdet/kernel.hpp"

namespace sigdet {

// Per-subinterval count statistics feeding the rating engine.
//   pair_counts[i]    : (drug, condition) -> n_dc, lag-weighted pair count
//   drug_counts[i]    : drug -> n_d, era starts in subinterval i
//   cond_counts[i]    : condition -> n_c, occurrence starts in subinterval i
//   drug_durations[i] : drug -> h_d, era days overlapping subinterval i
//   era_total[i] = N, duration_total[i] = H
struct CountTables {
    int32_t m = 1;
    std::vector<std::unordered_map<uint64_t, double>> pair_counts;
    std::vector<std::unordered_map<int32_t, int64_t>> drug_counts;
    std::vector<std::unordered_map<int32_t, int64_t>> cond_counts;
    std::vector<std::unordered_map<int32_t, int64_t>> drug_durations;
    std::vector<int64_t> era_total;
    std::vector<int64_t> duration_total;

    static CountTables zero(int32_t m);
};

using PatientFilter = std::function<bool(int64_t patient_id)>;

// Single pass producing all tables. A (era, occurrence) pair of the same
// patient counts once when 0 <= t_c - t_d <= delta, weighted by the kernel
// (1.0 when no kernel is given); pair and drug marginals are attributed to
// the subinterval of the era start, condition marginals to the occurrence
// start. Era days are attributed to every subinterval they overlap.
//
// Patients are processed in fixed-size index blocks whose partial tables
// are merged in block order, so the result is bit-identical for any worker
// count.
CountTables count(const Cohort& cohort,
                  int32_t delta,
                  const std::optional<WeightKernel>& kernel,
                  int32_t m,
                  bool first_era_only = false,
                  const PatientFilter& filter = {},
                  int workers = 1);

// Element-wise sum; both sides must share m.
CountTables merge(const CountTables& a, const CountTables& b);

// Checkpoint file for restartable pipelines. Implementation-defined layout
// with a versioned header; not a compatibility surface.
struct CountsCheckpoint {
    CountTables tables;
    std::vector<int32_t> drug_universe;
    std::vector<int32_t> condition_universe;
    int32_t delta = 0;
};

void save_counts(const CountsCheckpoint& cp, const std::string& path);
CountsCheckpoint load_counts(const std::string& path);

}  // namespace sigdet
