#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sigdet/ensemble.hpp"
#include "sigdet/kernel.hpp"
#include "sigdet/rating.hpp"
#include "sigdet/synth.hpp"

namespace sigdet {

struct RunSection {
    int32_t m = 10;
    int32_t delta = 40;            // window for the direct count/rate path
    bool weighted_kernel = false;  // false = uniform window weights
    bool first_era_only = true;
    int32_t workers = 1;
    std::string data_dir = "data";
    std::string out_dir = "out";
    bool dense_submission = false;  // emit every scope pair, absent scored 0
    int32_t report_top_k = 16;
    std::string eval_input;  // defaults to <out_dir>/submission.csv
    std::string report_prefix = "ens";
};

struct ScopeSection {
    int32_t drug_min = 1;
    int32_t drug_max = 0;  // 0 = unbounded
    int32_t cond_min = 1;
    int32_t cond_max = 0;  // 0 = unbounded
};

// Flat sectioned key=value config; command-line overrides win.
struct PipelineConfig {
    RunSection run;
    KernelShape kernel;
    GenConfig gen;
    RatingConfig dpa1;  // occurrence-based estimator
    RatingConfig dpa2;  // duration-based estimator
    BagConfig bag;
    EnsembleConfig ensemble;
    ScopeSection scope;

    void check() const;  // throws ConfigError
};

PipelineConfig default_config();

// Parses the file (empty path = defaults only), then applies overrides of
// the form "section.key=value". Unknown sections or keys are errors.
PipelineConfig load_config(const std::string& path, const std::vector<std::string>& overrides);

void apply_override(PipelineConfig& config, const std::string& assignment);

// Echoes every key in canonical order; the file parses back to the same config.
void write_resolved_config(const PipelineConfig& config, const std::string& path);
std::string resolved_config_text(const PipelineConfig& config);

// Scope = universe ids clipped to the configured bounds.
ScopePtr scope_from(const std::vector<int32_t>& drug_universe,
                    const std::vector<int32_t>& condition_universe,
                    const ScopeSection& bounds);

}  // namespace sigdet
