#include "sigdet/cohort.hpp"

#include <algorithm>
#include <unordered_set>

namespace sigdet {

void sort_patient_events(PatientRecord& p) {
    std::sort(p.drug_eras.begin(), p.drug_eras.end(), [](const DrugEra& a, const DrugEra& b) {
        return std::tie(a.drug_id, a.start_day, a.end_day) <
               std::tie(b.drug_id, b.start_day, b.end_day);
    });
    std::sort(p.conditions.begin(), p.conditions.end(),
              [](const ConditionOccurrence& a, const ConditionOccurrence& b) {
                  return std::tie(a.condition_id, a.start_day) <
                         std::tie(b.condition_id, b.start_day);
              });
}

namespace {

bool contains(const std::vector<int32_t>& sorted_ids, int32_t id) {
    return std::binary_search(sorted_ids.begin(), sorted_ids.end(), id);
}

std::string patient_tag(const PatientRecord& p) {
    return "patient " + std::to_string(p.patient_id);
}

}  // namespace

ValidationReport validate(const Cohort& cohort) {
    ValidationReport report;
    report.patient_count = cohort.patients.size();

    bool any_day = false;
    auto see_day = [&](int32_t day) {
        if (!any_day) {
            report.min_day = report.max_day = day;
            any_day = true;
        } else {
            report.min_day = std::min(report.min_day, day);
            report.max_day = std::max(report.max_day, day);
        }
    };
    auto violation = [&](std::string text) { report.violations.push_back(std::move(text)); };

    std::unordered_set<int64_t> seen_ids;
    const int32_t horizon = cohort.axis.horizon_days;

    for (const PatientRecord& p : cohort.patients) {
        if (!seen_ids.insert(p.patient_id).second)
            violation("duplicate patient_id " + std::to_string(p.patient_id));

        see_day(p.obs_start);
        see_day(p.obs_end);
        if (p.obs_start > p.obs_end)
            violation(patient_tag(p) + ": obs_start " + std::to_string(p.obs_start) +
                      " > obs_end " + std::to_string(p.obs_end));
        if (p.obs_start < 0 || p.obs_end > horizon)
            violation(patient_tag(p) + ": observation period [" + std::to_string(p.obs_start) +
                      ", " + std::to_string(p.obs_end) + "] outside [0, " +
                      std::to_string(horizon) + "]");

        for (size_t i = 0; i < p.drug_eras.size(); ++i) {
            const DrugEra& era = p.drug_eras[i];
            report.era_count++;
            see_day(era.start_day);
            see_day(era.end_day);
            if (era.start_day > era.end_day)
                violation(patient_tag(p) + ": era of drug " + std::to_string(era.drug_id) +
                          " has start_day " + std::to_string(era.start_day) + " > end_day " +
                          std::to_string(era.end_day));
            if (era.start_day < p.obs_start || era.end_day > p.obs_end)
                violation(patient_tag(p) + ": era of drug " + std::to_string(era.drug_id) +
                          " at days [" + std::to_string(era.start_day) + ", " +
                          std::to_string(era.end_day) + "] outside observation period");
            if (era.end_day > horizon)
                violation(patient_tag(p) + ": era of drug " + std::to_string(era.drug_id) +
                          " ends at day " + std::to_string(era.end_day) + " beyond horizon " +
                          std::to_string(horizon));
            if (!contains(cohort.drug_universe, era.drug_id))
                violation(patient_tag(p) + ": drug " + std::to_string(era.drug_id) +
                          " missing from drug_universe");
            if (i > 0) {
                const DrugEra& prev = p.drug_eras[i - 1];
                if (std::tie(era.drug_id, era.start_day) < std::tie(prev.drug_id, prev.start_day))
                    violation(patient_tag(p) +
                              ": drug_eras not sorted by (drug_id, start_day)");
            }
        }

        for (size_t i = 0; i < p.conditions.size(); ++i) {
            const ConditionOccurrence& occ = p.conditions[i];
            report.condition_count++;
            see_day(occ.start_day);
            if (occ.start_day < p.obs_start || occ.start_day > p.obs_end)
                violation(patient_tag(p) + ": condition " + std::to_string(occ.condition_id) +
                          " at day " + std::to_string(occ.start_day) +
                          " outside observation period");
            if (occ.start_day > horizon)
                violation(patient_tag(p) + ": condition " + std::to_string(occ.condition_id) +
                          " at day " + std::to_string(occ.start_day) + " beyond horizon " +
                          std::to_string(horizon));
            if (!contains(cohort.condition_universe, occ.condition_id))
                violation(patient_tag(p) + ": condition " + std::to_string(occ.condition_id) +
                          " missing from condition_universe");
            if (i > 0) {
                const ConditionOccurrence& prev = p.conditions[i - 1];
                if (std::tie(occ.condition_id, occ.start_day) <
                    std::tie(prev.condition_id, prev.start_day))
                    violation(patient_tag(p) +
                              ": conditions not sorted by (condition_id, start_day)");
            }
        }
    }
    return report;
}

Cohort first_eras_only(const Cohort& cohort) {
    Cohort out = cohort;
    for (PatientRecord& p : out.patients) {
        std::vector<DrugEra> kept;
        kept.reserve(p.drug_eras.size());
        // Eras are sorted by (drug_id, start_day): the first era of each
        // drug group is the earliest one.
        for (const DrugEra& era : p.drug_eras) {
            if (kept.empty() || kept.back().drug_id != era.drug_id) kept.push_back(era);
        }
        p.drug_eras = std::move(kept);
    }
    return out;
}

}  // namespace sigdet
