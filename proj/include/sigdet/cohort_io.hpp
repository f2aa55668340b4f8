#pragma once

#include <string>

#include "sigdet/cohort.hpp"
#include "sigdet/truth.hpp"

namespace sigdet {

// CSV schemas (header row required, comma separated, LF endings):
//   patients.csv:   patient_id,obs_start,obs_end,age_years,sex   sex in {F,M,U}
//   drug_eras.csv:  patient_id,drug_id,start_day,end_day
//   conditions.csv: patient_id,condition_id,start_day
//   truth.csv:      drug_id,condition_id,label                   label in {1,0}

// Loads and canonicalizes a cohort: events are sorted per patient and the
// universes are the ids actually seen. Rows violating the data model
// (malformed fields, unknown patients, inverted eras, events outside the
// observation period) raise DataError listing the offending rows.
Cohort load_cohort(const std::string& patients_path,
                   const std::string& drug_eras_path,
                   const std::string& conditions_path,
                   const TimeAxis& axis);

void write_cohort_csv(const Cohort& cohort,
                      const std::string& patients_path,
                      const std::string& drug_eras_path,
                      const std::string& conditions_path);

GroundTruth load_truth(const std::string& path);
void write_truth_csv(const GroundTruth& truth, const std::string& path);

}  // namespace sigdet
