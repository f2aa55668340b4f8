#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "sigdet/counting.hpp"

namespace sigdet {

enum class ExposureModel { occurrence, duration };

struct Transform {
    enum class Kind { natural_log, power };
    Kind kind = Kind::natural_log;
    double exponent = 0.5;  // used by Kind::power only

    double apply(double x) const;
    friend bool operator==(const Transform&, const Transform&) = default;
};

struct RatingConfig {
    double alpha = 0.3;  // additive shrinkage in numerator and denominator
    Transform transform;
    ExposureModel model = ExposureModel::occurrence;

    void check() const;  // throws ConfigError
};

// Drug/condition ids a rating matrix is allowed to score. Sorted, unique.
struct Scope {
    std::vector<int32_t> drugs;
    std::vector<int32_t> conditions;

    friend bool operator==(const Scope&, const Scope&) = default;
};
using ScopePtr = std::shared_ptr<const Scope>;

ScopePtr make_scope(std::vector<int32_t> drugs, std::vector<int32_t> conditions);

struct SubintervalTag {
    enum class Kind { per_interval, cumulative };
    Kind kind = Kind::per_interval;
    int32_t year = 1;  // 1-based

    friend bool operator==(const SubintervalTag&, const SubintervalTag&) = default;
};

// Sparse drug x condition score matrix. Absent keys mean "no evidence" and
// rank below every present key.
struct RatingMatrix {
    ScopePtr scope;
    SubintervalTag tag;
    std::unordered_map<uint64_t, double> scores;

    double at(uint64_t key) const {
        auto it = scores.find(key);
        return it == scores.end() ? 0.0 : it->second;
    }
};

// f((n_dc + alpha) / (b_dc + alpha))
double shrunk_rating(double n_dc, double b_dc, double alpha, const Transform& transform);

// Expected pair count under independence for subinterval i: lambda_d * n_c
// with lambda_d = n_d / N (occurrence) or theta_d * n_c with theta_d =
// h_d / H (duration). Throws NoExposureError when the total is zero.
double expected_count(const CountTables& tables, int32_t i, int32_t drug_id,
                      int32_t condition_id, ExposureModel model);

// Scores every in-scope pair with n_dc > 0 or b_dc > 0 for subinterval i;
// pairs never observed and never expected are omitted.
RatingMatrix rate(const CountTables& tables, const RatingConfig& config, int32_t i,
                  const ScopePtr& scope);

std::vector<RatingMatrix> rate_all(const CountTables& tables, const RatingConfig& config,
                                   const ScopePtr& scope);

// Prefix means: s^(y) = (1/y) * sum_{i<=y} r^(i), absent keys read as 0.
std::vector<RatingMatrix> cumulate(const std::vector<RatingMatrix>& ratings);

// CSV export "drug_id,condition_id,score", descending score, ties by
// ascending (drug_id, condition_id), 6 decimal places.
void write_matrix_csv(const RatingMatrix& matrix, const std::string& path);
RatingMatrix load_matrix_csv(const std::string& path, const ScopePtr& scope,
                             const SubintervalTag& tag);

}  // namespace sigdet
