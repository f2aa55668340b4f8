#include "sigdet/synth.hpp"

#include <algorithm>
#include <filesystem>
#include <numeric>

#include "sigdet/cohort_io.hpp"
#include "sigdet/errors.hpp"
#include "sigdet/rng.hpp"

namespace sigdet {

void GenConfig::check() const {
    if (n_patients < 0) throw ConfigError("gen.n_patients must be >= 0");
    if (n_drugs < 1) throw ConfigError("gen.n_drugs must be >= 1");
    if (n_conditions < 1) throw ConfigError("gen.n_conditions must be >= 1");
    if (years < 1) throw ConfigError("gen.years must be >= 1");
    if (drug_rate < 0 || cond_rate < 0) throw ConfigError("gen rates must be >= 0");
    if (era_length_days < 1) throw ConfigError("gen.era_length_days must be >= 1");
    if (effect_prob <= 0.0 || effect_prob > 1.0)
        throw ConfigError("gen.effect_prob must be in (0, 1]");
    if (lag_min_days < 0 || lag_min_days > lag_max_days)
        throw ConfigError("gen lags must satisfy 0 <= lag_min_days <= lag_max_days");
    if (n_spiked < 0 || int64_t(n_spiked) > int64_t(n_drugs) * int64_t(n_conditions))
        throw ConfigError("gen.n_spiked must be in [0, n_drugs * n_conditions]");
}

namespace {

// Stream tags keeping the truth-sampling stream disjoint from patient streams.
constexpr uint64_t kTruthStream = 0x7472757468ull;  // "truth"

std::vector<uint64_t> sample_distinct_pairs(Rng& rng, int32_t n_drugs, int32_t n_conditions,
                                            int64_t want,
                                            const std::unordered_set<uint64_t>& exclude) {
    const int64_t grid = int64_t(n_drugs) * int64_t(n_conditions);
    const int64_t available = grid - int64_t(exclude.size());
    want = std::min(want, available);

    std::vector<uint64_t> picked;
    picked.reserve(size_t(want));
    if (want <= 0) return picked;

    if (want * 4 >= available) {
        // Dense request: enumerate the free cells and Fisher-Yates the prefix.
        std::vector<uint64_t> cells;
        cells.reserve(size_t(available));
        for (int32_t d = 1; d <= n_drugs; ++d)
            for (int32_t c = 1; c <= n_conditions; ++c) {
                uint64_t key = pair_key(d, c);
                if (!exclude.count(key)) cells.push_back(key);
            }
        for (int64_t i = 0; i < want; ++i) {
            int64_t j = i + rng.uniform_int(0, int64_t(cells.size()) - 1 - i);
            std::swap(cells[size_t(i)], cells[size_t(j)]);
            picked.push_back(cells[size_t(i)]);
        }
    } else {
        std::unordered_set<uint64_t> chosen;
        while (int64_t(picked.size()) < want) {
            int32_t d = int32_t(rng.uniform_int(1, n_drugs));
            int32_t c = int32_t(rng.uniform_int(1, n_conditions));
            uint64_t key = pair_key(d, c);
            if (exclude.count(key) || !chosen.insert(key).second) continue;
            picked.push_back(key);
        }
    }
    return picked;
}

}  // namespace

GenResult generate(const GenConfig& config) {
    config.check();

    GenResult result;
    Cohort& cohort = result.cohort;
    cohort.axis = config.axis();
    const int32_t horizon = cohort.axis.horizon_days;

    // Spiked pairs and negatives come from a dedicated stream so patient
    // data is unaffected by n_spiked.
    {
        Rng truth_rng = Rng::from(config.seed, kTruthStream);
        for (uint64_t key :
             sample_distinct_pairs(truth_rng, config.n_drugs, config.n_conditions,
                                   config.n_spiked, {}))
            result.truth.positives.insert(key);
        for (uint64_t key :
             sample_distinct_pairs(truth_rng, config.n_drugs, config.n_conditions,
                                   config.n_spiked, result.truth.positives))
            result.truth.negatives.insert(key);
    }

    // drug -> conditions it causes, in deterministic order.
    std::unordered_map<int32_t, std::vector<int32_t>> caused_by_drug;
    {
        std::vector<uint64_t> spiked(result.truth.positives.begin(),
                                     result.truth.positives.end());
        std::sort(spiked.begin(), spiked.end());
        for (uint64_t key : spiked)
            caused_by_drug[pair_drug(key)].push_back(pair_condition(key));
    }

    cohort.drug_universe.resize(size_t(config.n_drugs));
    std::iota(cohort.drug_universe.begin(), cohort.drug_universe.end(), 1);
    cohort.condition_universe.resize(size_t(config.n_conditions));
    std::iota(cohort.condition_universe.begin(), cohort.condition_universe.end(), 1);

    cohort.patients.reserve(size_t(config.n_patients));
    for (int64_t id = 1; id <= config.n_patients; ++id) {
        Rng rng = Rng::from(config.seed, uint64_t(id));
        PatientRecord p;
        p.patient_id = id;

        int32_t a = int32_t(rng.uniform_int(0, horizon - 1));
        int32_t b = int32_t(rng.uniform_int(0, horizon - 1));
        p.obs_start = std::min(a, b);
        p.obs_end = std::max(a, b);
        p.age_years = int32_t(rng.uniform_int(18, 90));
        p.sex = rng.uniform() < 0.5 ? Sex::female : Sex::male;

        const double obs_years = double(p.obs_end - p.obs_start + 1) / 365.0;

        int64_t n_eras = rng.poisson(config.drug_rate * obs_years);
        p.drug_eras.reserve(size_t(n_eras));
        for (int64_t e = 0; e < n_eras; ++e) {
            DrugEra era;
            era.drug_id = int32_t(rng.uniform_int(1, config.n_drugs));
            era.start_day = int32_t(rng.uniform_int(p.obs_start, p.obs_end));
            int64_t len = rng.geometric_min1(config.era_length_days);
            era.end_day = int32_t(std::min<int64_t>(era.start_day + len - 1, p.obs_end));
            p.drug_eras.push_back(era);
        }

        int64_t n_conds = rng.poisson(config.cond_rate * obs_years);
        p.conditions.reserve(size_t(n_conds));
        for (int64_t c = 0; c < n_conds; ++c) {
            ConditionOccurrence occ;
            occ.condition_id = int32_t(rng.uniform_int(1, config.n_conditions));
            occ.start_day = int32_t(rng.uniform_int(p.obs_start, p.obs_end));
            p.conditions.push_back(occ);
        }

        // Causal injections: every era start of a spiked drug triggers, with
        // probability effect_prob, one occurrence of the paired condition at
        // a lagged day clipped into the observation period.
        if (!caused_by_drug.empty()) {
            for (const DrugEra& era : p.drug_eras) {
                auto it = caused_by_drug.find(era.drug_id);
                if (it == caused_by_drug.end()) continue;
                for (int32_t condition : it->second) {
                    if (rng.uniform() >= config.effect_prob) continue;
                    int32_t lag =
                        int32_t(rng.uniform_int(config.lag_min_days, config.lag_max_days));
                    int32_t day = era.start_day + lag;
                    day = std::min(day, p.obs_end);
                    p.conditions.push_back(ConditionOccurrence{condition, day});
                    result.injected_occurrences++;
                }
            }
        }

        sort_patient_events(p);
        cohort.patients.push_back(std::move(p));
    }

    return result;
}

void write_cohort(const Cohort& cohort, const GroundTruth& truth, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    const std::filesystem::path dir(out_dir);
    write_cohort_csv(cohort, (dir / "patients.csv").string(), (dir / "drug_eras.csv").string(),
                     (dir / "conditions.csv").string());
    write_truth_csv(truth, (dir / "truth.csv").string());
}

}  // namespace sigdet
