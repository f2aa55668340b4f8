#include "sigdet/cohort_io.hpp"

#include <algorithm>
#include <unordered_map>

#include "csv_util.hpp"

namespace sigdet {

namespace {

// Collects offending rows and raises one DataError naming them all
// (truncated past a cap to keep messages usable).
class RowErrors {
  public:
    void add(const std::string& detail) {
        ++total_;
        if (rows_.size() < 20) rows_.push_back(detail);
    }
    void raise_if_any(const std::string& context) const {
        if (total_ == 0) return;
        std::string msg = context + ": " + std::to_string(total_) + " offending row(s)";
        for (const std::string& r : rows_) msg += "\n  " + r;
        if (total_ > rows_.size())
            msg += "\n  ... and " + std::to_string(total_ - rows_.size()) + " more";
        throw DataError(msg);
    }

  private:
    uint64_t total_ = 0;
    std::vector<std::string> rows_;
};

Sex parse_sex(const std::string& field, const csv::Reader& reader) {
    if (field == "F") return Sex::female;
    if (field == "M") return Sex::male;
    if (field == "U") return Sex::unknown;
    throw DataError(reader.where() + ": sex must be one of F, M, U; got '" + field + "'");
}

int32_t narrow_id(int64_t value, const char* what, const csv::Reader& reader) {
    if (value < 1 || value > INT32_MAX)
        throw DataError(reader.where() + ": " + what + " must be a positive 32-bit integer, got " +
                        std::to_string(value));
    return int32_t(value);
}

int32_t narrow_day(int64_t value, const char* what, const csv::Reader& reader) {
    if (value < INT32_MIN || value > INT32_MAX)
        throw DataError(reader.where() + ": " + what + " out of range: " + std::to_string(value));
    return int32_t(value);
}

}  // namespace

Cohort load_cohort(const std::string& patients_path,
                   const std::string& drug_eras_path,
                   const std::string& conditions_path,
                   const TimeAxis& axis) {
    Cohort cohort;
    cohort.axis = axis;

    std::unordered_map<int64_t, size_t> index_by_id;
    {
        csv::Reader reader(patients_path, "patient_id,obs_start,obs_end,age_years,sex");
        RowErrors errors;
        std::vector<std::string> f;
        while (reader.next(f)) {
            PatientRecord p;
            p.patient_id = reader.to_int(f[0]);
            p.obs_start = narrow_day(reader.to_int(f[1]), "obs_start", reader);
            p.obs_end = narrow_day(reader.to_int(f[2]), "obs_end", reader);
            p.age_years = narrow_day(reader.to_int(f[3]), "age_years", reader);
            p.sex = parse_sex(f[4], reader);
            if (!index_by_id.emplace(p.patient_id, cohort.patients.size()).second) {
                errors.add(reader.where() + ": duplicate patient_id " +
                           std::to_string(p.patient_id));
                continue;
            }
            if (p.obs_start > p.obs_end)
                errors.add(reader.where() + ": obs_start > obs_end");
            else if (p.obs_start < 0 || p.obs_end > axis.horizon_days)
                errors.add(reader.where() + ": observation period outside [0, " +
                           std::to_string(axis.horizon_days) + "]");
            cohort.patients.push_back(std::move(p));
        }
        errors.raise_if_any(patients_path);
    }

    {
        csv::Reader reader(drug_eras_path, "patient_id,drug_id,start_day,end_day");
        RowErrors errors;
        std::vector<std::string> f;
        while (reader.next(f)) {
            int64_t patient_id = reader.to_int(f[0]);
            DrugEra era;
            era.drug_id = narrow_id(reader.to_int(f[1]), "drug_id", reader);
            era.start_day = narrow_day(reader.to_int(f[2]), "start_day", reader);
            era.end_day = narrow_day(reader.to_int(f[3]), "end_day", reader);
            auto it = index_by_id.find(patient_id);
            if (it == index_by_id.end()) {
                errors.add(reader.where() + ": unknown patient_id " + std::to_string(patient_id));
                continue;
            }
            PatientRecord& p = cohort.patients[it->second];
            if (era.start_day > era.end_day) {
                errors.add(reader.where() + ": era start_day " + std::to_string(era.start_day) +
                           " > end_day " + std::to_string(era.end_day));
                continue;
            }
            if (era.start_day < p.obs_start || era.end_day > p.obs_end) {
                errors.add(reader.where() + ": era outside observation period [" +
                           std::to_string(p.obs_start) + ", " + std::to_string(p.obs_end) +
                           "] of patient " + std::to_string(patient_id));
                continue;
            }
            p.drug_eras.push_back(era);
        }
        errors.raise_if_any(drug_eras_path);
    }

    {
        csv::Reader reader(conditions_path, "patient_id,condition_id,start_day");
        RowErrors errors;
        std::vector<std::string> f;
        while (reader.next(f)) {
            int64_t patient_id = reader.to_int(f[0]);
            ConditionOccurrence occ;
            occ.condition_id = narrow_id(reader.to_int(f[1]), "condition_id", reader);
            occ.start_day = narrow_day(reader.to_int(f[2]), "start_day", reader);
            auto it = index_by_id.find(patient_id);
            if (it == index_by_id.end()) {
                errors.add(reader.where() + ": unknown patient_id " + std::to_string(patient_id));
                continue;
            }
            PatientRecord& p = cohort.patients[it->second];
            if (occ.start_day < p.obs_start || occ.start_day > p.obs_end) {
                errors.add(reader.where() + ": condition at day " +
                           std::to_string(occ.start_day) + " outside observation period [" +
                           std::to_string(p.obs_start) + ", " + std::to_string(p.obs_end) +
                           "] of patient " + std::to_string(patient_id));
                continue;
            }
            p.conditions.push_back(occ);
        }
        errors.raise_if_any(conditions_path);
    }

    std::vector<int32_t> drugs, conds;
    for (PatientRecord& p : cohort.patients) {
        sort_patient_events(p);
        for (const DrugEra& era : p.drug_eras) drugs.push_back(era.drug_id);
        for (const ConditionOccurrence& occ : p.conditions) conds.push_back(occ.condition_id);
    }
    std::sort(drugs.begin(), drugs.end());
    drugs.erase(std::unique(drugs.begin(), drugs.end()), drugs.end());
    std::sort(conds.begin(), conds.end());
    conds.erase(std::unique(conds.begin(), conds.end()), conds.end());
    cohort.drug_universe = std::move(drugs);
    cohort.condition_universe = std::move(conds);
    return cohort;
}

void write_cohort_csv(const Cohort& cohort,
                      const std::string& patients_path,
                      const std::string& drug_eras_path,
                      const std::string& conditions_path) {
    csv::Writer patients(patients_path, "patient_id,obs_start,obs_end,age_years,sex");
    csv::Writer eras(drug_eras_path, "patient_id,drug_id,start_day,end_day");
    csv::Writer conds(conditions_path, "patient_id,condition_id,start_day");

    for (const PatientRecord& p : cohort.patients) {
        patients.stream() << p.patient_id << ',' << p.obs_start << ',' << p.obs_end << ','
                          << p.age_years << ',' << sex_code(p.sex) << '\n';
        for (const DrugEra& era : p.drug_eras)
            eras.stream() << p.patient_id << ',' << era.drug_id << ',' << era.start_day << ','
                          << era.end_day << '\n';
        for (const ConditionOccurrence& occ : p.conditions)
            conds.stream() << p.patient_id << ',' << occ.condition_id << ',' << occ.start_day
                           << '\n';
    }
    patients.close();
    eras.close();
    conds.close();
}

GroundTruth load_truth(const std::string& path) {
    GroundTruth truth;
    csv::Reader reader(path, "drug_id,condition_id,label");
    std::vector<std::string> f;
    while (reader.next(f)) {
        int32_t drug = narrow_id(reader.to_int(f[0]), "drug_id", reader);
        int32_t cond = narrow_id(reader.to_int(f[1]), "condition_id", reader);
        uint64_t key = pair_key(drug, cond);
        if (f[2] == "1") {
            if (truth.negatives.count(key))
                throw DataError(reader.where() + ": pair labeled both positive and negative");
            truth.positives.insert(key);
        } else if (f[2] == "0") {
            if (truth.positives.count(key))
                throw DataError(reader.where() + ": pair labeled both positive and negative");
            truth.negatives.insert(key);
        } else {
            throw DataError(reader.where() + ": label must be 1 or 0, got '" + f[2] + "'");
        }
    }
    return truth;
}

void write_truth_csv(const GroundTruth& truth, const std::string& path) {
    csv::Writer writer(path, "drug_id,condition_id,label");
    auto sorted_keys = [](const std::unordered_set<uint64_t>& keys) {
        std::vector<uint64_t> v(keys.begin(), keys.end());
        std::sort(v.begin(), v.end());
        return v;
    };
    for (uint64_t key : sorted_keys(truth.positives))
        writer.stream() << pair_drug(key) << ',' << pair_condition(key) << ",1\n";
    for (uint64_t key : sorted_keys(truth.negatives))
        writer.stream() << pair_drug(key) << ',' << pair_condition(key) << ",0\n";
    writer.close();
}

}  // namespace sigdet
