#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sigdet/time_axis.hpp"

namespace sigdet {

enum class Sex : uint8_t { female, male, unknown };

inline char sex_code(Sex s) {
    switch (s) {
        case Sex::female: return 'F';
        case Sex::male: return 'M';
        default: return 'U';
    }
}

// Packed (drug_id, condition_id) key used by sparse pair maps.
inline uint64_t pair_key(int32_t drug_id, int32_t condition_id) {
    return (uint64_t(uint32_t(drug_id)) << 32) | uint32_t(condition_id);
}
inline int32_t pair_drug(uint64_t key) { return int32_t(key >> 32); }
inline int32_t pair_condition(uint64_t key) { return int32_t(key & 0xffffffffull); }

struct DrugEra {
    int32_t drug_id = 0;
    int32_t start_day = 0;
    int32_t end_day = 0;

    int32_t length_days() const { return end_day - start_day + 1; }
    friend bool operator==(const DrugEra&, const DrugEra&) = default;
};

struct ConditionOccurrence {
    int32_t condition_id = 0;
    int32_t start_day = 0;

    friend bool operator==(const ConditionOccurrence&, const ConditionOccurrence&) = default;
};

struct PatientRecord {
    int64_t patient_id = 0;
    int32_t obs_start = 0;
    int32_t obs_end = 0;
    int32_t age_years = 0;  // carried through, never consumed by rating code
    Sex sex = Sex::unknown; // carried through, never consumed by rating code
    std::vector<DrugEra> drug_eras;               // sorted by (drug_id, start_day)
    std::vector<ConditionOccurrence> conditions;  // sorted by (condition_id, start_day)

    friend bool operator==(const PatientRecord&, const PatientRecord&) = default;
};

// Immutable after construction; safe to read from any number of workers.
struct Cohort {
    std::vector<PatientRecord> patients;
    std::vector<int32_t> drug_universe;       // sorted, unique
    std::vector<int32_t> condition_universe;  // sorted, unique
    TimeAxis axis;

    friend bool operator==(const Cohort&, const Cohort&) = default;
};

struct ValidationReport {
    uint64_t patient_count = 0;
    uint64_t era_count = 0;
    uint64_t condition_count = 0;
    int32_t min_day = 0;  // over observation bounds and event days; 0 when empty
    int32_t max_day = 0;
    std::vector<std::string> violations;

    bool ok() const { return violations.empty(); }
};

// Lists every type-invariant violation as data; never throws.
ValidationReport validate(const Cohort& cohort);

// Keeps, for each (patient, drug), only the era with the smallest start
// day. Condition occurrences and observation periods are untouched.
Cohort first_eras_only(const Cohort& cohort);

void sort_patient_events(PatientRecord& p);

}  // namespace sigdet
