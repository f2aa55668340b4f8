#include "sigdet/rating.hpp"

#include <algorithm>
#include <cmath>

#include "csv_util.hpp"

namespace sigdet {

double Transform::apply(double x) const {
    return kind == Kind::natural_log ? std::log(x) : std::pow(x, exponent);
}

void RatingConfig::check() const {
    if (alpha <= 0.0) throw ConfigError("rating alpha must be > 0");
    if (transform.kind == Transform::Kind::power && transform.exponent <= 0.0)
        throw ConfigError("rating power exponent must be > 0");
}

ScopePtr make_scope(std::vector<int32_t> drugs, std::vector<int32_t> conditions) {
    auto canonical = [](std::vector<int32_t>& ids) {
        std::sort(ids.begin(), ids.end());
        ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    };
    canonical(drugs);
    canonical(conditions);
    auto scope = std::make_shared<Scope>();
    scope->drugs = std::move(drugs);
    scope->conditions = std::move(conditions);
    return scope;
}

double shrunk_rating(double n_dc, double b_dc, double alpha, const Transform& transform) {
    return transform.apply((n_dc + alpha) / (b_dc + alpha));
}

namespace {

int64_t lookup(const std::unordered_map<int32_t, int64_t>& map, int32_t id) {
    auto it = map.find(id);
    return it == map.end() ? 0 : it->second;
}

void check_subinterval(const CountTables& tables, int32_t i) {
    if (i < 0 || i >= tables.m)
        throw ConfigError("subinterval index " + std::to_string(i) + " outside [0, " +
                          std::to_string(tables.m - 1) + "]");
}

void check_same_scope(const RatingMatrix& a, const RatingMatrix& b, const char* what) {
    if (!a.scope || !b.scope || !(*a.scope == *b.scope))
        throw DataError(std::string(what) + ": rating matrices have mismatched scopes");
}

}  // namespace

double expected_count(const CountTables& tables, int32_t i, int32_t drug_id,
                      int32_t condition_id, ExposureModel model) {
    check_subinterval(tables, i);
    const int64_t n_c = lookup(tables.cond_counts[size_t(i)], condition_id);
    if (model == ExposureModel::occurrence) {
        const int64_t total = tables.era_total[size_t(i)];
        if (total == 0)
            throw NoExposureError("expected_count: no drug exposure in subinterval " +
                                  std::to_string(i) + " (N = 0)");
        const int64_t n_d = lookup(tables.drug_counts[size_t(i)], drug_id);
        return double(n_d) / double(total) * double(n_c);
    }
    const int64_t total = tables.duration_total[size_t(i)];
    if (total == 0)
        throw NoExposureError("expected_count: no drug exposure in subinterval " +
                              std::to_string(i) + " (H = 0)");
    const int64_t h_d = lookup(tables.drug_durations[size_t(i)], drug_id);
    return double(h_d) / double(total) * double(n_c);
}

RatingMatrix rate(const CountTables& tables, const RatingConfig& config, int32_t i,
                  const ScopePtr& scope) {
    config.check();
    check_subinterval(tables, i);
    if (!scope) throw ConfigError("rate: null scope");

    RatingMatrix out;
    out.scope = scope;
    out.tag = SubintervalTag{SubintervalTag::Kind::per_interval, i + 1};

    const bool occurrence = config.model == ExposureModel::occurrence;
    const auto& exposure =
        occurrence ? tables.drug_counts[size_t(i)] : tables.drug_durations[size_t(i)];
    const int64_t total =
        occurrence ? tables.era_total[size_t(i)] : tables.duration_total[size_t(i)];
    const auto& pair_counts = tables.pair_counts[size_t(i)];
    const auto& cond_counts = tables.cond_counts[size_t(i)];
    const double alpha = config.alpha;

    // Dense part: every (active drug, active condition) pair has b_dc > 0.
    if (total > 0) {
        std::vector<std::pair<int32_t, int64_t>> active_conds;
        active_conds.reserve(cond_counts.size());
        for (int32_t c : scope->conditions) {
            int64_t n_c = lookup(cond_counts, c);
            if (n_c > 0) active_conds.emplace_back(c, n_c);
        }
        for (int32_t d : scope->drugs) {
            int64_t exp_d = lookup(exposure, d);
            if (exp_d == 0) continue;
            const double share = double(exp_d) / double(total);
            for (const auto& [c, n_c] : active_conds) {
                uint64_t key = pair_key(d, c);
                auto it = pair_counts.find(key);
                const double n_dc = it == pair_counts.end() ? 0.0 : it->second;
                out.scores.emplace(key,
                                   shrunk_rating(n_dc, share * double(n_c), alpha,
                                                 config.transform));
            }
        }
    }

    // Observed pairs whose expectation is zero (condition inactive in this
    // subinterval, or drug lacking exposure under the duration model).
    for (const auto& [key, n_dc] : pair_counts) {
        if (n_dc <= 0.0 || out.scores.count(key)) continue;
        int32_t d = pair_drug(key);
        int32_t c = pair_condition(key);
        if (!std::binary_search(scope->drugs.begin(), scope->drugs.end(), d)) continue;
        if (!std::binary_search(scope->conditions.begin(), scope->conditions.end(), c)) continue;
        double b_dc = 0.0;
        if (total > 0) {
            int64_t exp_d = lookup(exposure, d);
            b_dc = double(exp_d) / double(total) * double(lookup(cond_counts, c));
        }
        out.scores.emplace(key, shrunk_rating(n_dc, b_dc, alpha, config.transform));
    }
    return out;
}

std::vector<RatingMatrix> rate_all(const CountTables& tables, const RatingConfig& config,
                                   const ScopePtr& scope) {
    std::vector<RatingMatrix> out;
    out.reserve(size_t(tables.m));
    for (int32_t i = 0; i < tables.m; ++i) out.push_back(rate(tables, config, i, scope));
    return out;
}

std::vector<RatingMatrix> cumulate(const std::vector<RatingMatrix>& ratings) {
    if (ratings.empty()) throw ConfigError("cumulate: need at least one rating matrix");
    for (size_t y = 1; y < ratings.size(); ++y)
        check_same_scope(ratings[0], ratings[y], "cumulate");

    std::vector<RatingMatrix> out;
    out.reserve(ratings.size());
    std::unordered_map<uint64_t, double> running;
    for (size_t y = 0; y < ratings.size(); ++y) {
        for (const auto& [key, value] : ratings[y].scores) running[key] += value;
        RatingMatrix s;
        s.scope = ratings[y].scope;
        s.tag = SubintervalTag{SubintervalTag::Kind::cumulative, int32_t(y) + 1};
        s.scores.reserve(running.size());
        const double years = double(y + 1);
        for (const auto& [key, sum] : running) s.scores.emplace(key, sum / years);
        out.push_back(std::move(s));
    }
    return out;
}

void write_matrix_csv(const RatingMatrix& matrix, const std::string& path) {
    std::vector<std::pair<uint64_t, double>> rows(matrix.scores.begin(), matrix.scores.end());
    std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    csv::Writer writer(path, "drug_id,condition_id,score");
    for (const auto& [key, score] : rows)
        writer.stream() << pair_drug(key) << ',' << pair_condition(key) << ','
                        << csv::format_score(score) << '\n';
    writer.close();
}

RatingMatrix load_matrix_csv(const std::string& path, const ScopePtr& scope,
                             const SubintervalTag& tag) {
    RatingMatrix out;
    out.scope = scope;
    out.tag = tag;
    csv::Reader reader(path, "drug_id,condition_id,score");
    std::vector<std::string> f;
    while (reader.next(f)) {
        int32_t d = int32_t(reader.to_int(f[0]));
        int32_t c = int32_t(reader.to_int(f[1]));
        double score = reader.to_double(f[2]);
        if (scope) {
            if (!std::binary_search(scope->drugs.begin(), scope->drugs.end(), d) ||
                !std::binary_search(scope->conditions.begin(), scope->conditions.end(), c))
                throw DataError(reader.where() + ": pair (" + std::to_string(d) + ", " +
                                std::to_string(c) + ") outside the matrix scope");
        }
        if (!out.scores.emplace(pair_key(d, c), score).second)
            throw DataError(reader.where() + ": duplicate pair");
    }
    return out;
}

}  // namespace sigdet
