#include "sigdet/ensemble.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <thread>

#include "csv_util.hpp"
#include "sigdet/counting.hpp"
#include "sigdet/rng.hpp"

namespace sigdet {

void BagConfig::check() const {
    if (k < 1) throw ConfigError("bag.k must be >= 1");
    if (inclusion_prob <= 0.0 || inclusion_prob > 1.0)
        throw ConfigError("bag.inclusion_prob must be in (0, 1]");
    if (delta_min < 0 || delta_min > delta_max)
        throw ConfigError("bag deltas must satisfy 0 <= delta_min <= delta_max");
}

// The boundary values are accepted so that tau = 0 degenerates to DPA2 and
// tau = 1 to the scale-adjusted DPA1.
void EnsembleConfig::check() const {
    if (tau < 0.0 || tau > 1.0) throw ConfigError("ensemble.tau must be in [0, 1]");
}

namespace {

// Inclusion rule of the resampling scheme: a patient joins replicate j when
// its uniform draw gamma(seed, j, patient_id) falls at or below the
// inclusion probability.
double gamma_draw(uint64_t seed, int32_t j, int64_t patient_id) {
    return Rng::from(seed, uint64_t(j), uint64_t(patient_id)).uniform();
}

struct ReplicateOutput {
    std::vector<std::vector<RatingMatrix>> s_per_config;  // [config][year]
    ReplicateInfo info;
};

}  // namespace

BagResult bag_many(const Cohort& cohort,
                   const std::vector<RatingConfig>& rating_configs,
                   const BagConfig& bag_config,
                   int32_t m,
                   const std::optional<KernelShape>& kernel,
                   bool first_era_only,
                   const ScopePtr& scope,
                   int workers) {
    bag_config.check();
    for (const RatingConfig& rc : rating_configs) rc.check();
    if (rating_configs.empty()) throw ConfigError("bag: need at least one rating config");
    if (kernel) WeightKernel::make(*kernel, bag_config.delta_min);  // validates shape vs window

    const uint64_t seed = bag_config.seed;
    const int32_t k = bag_config.k;
    const double inclusion = bag_config.inclusion_prob;

    std::vector<ReplicateOutput> outputs;
    outputs.resize(size_t(k));

    auto run_replicate = [&](int32_t j) {  // j is 1-based
        auto started = std::chrono::steady_clock::now();
        ReplicateOutput& out = outputs[size_t(j - 1)];
        out.info.j = j;

        Rng rng = Rng::from(seed, uint64_t(j));
        const int32_t delta = int32_t(rng.uniform_int(bag_config.delta_min, bag_config.delta_max));
        out.info.delta = delta;

        uint64_t omega = 0;
        for (const PatientRecord& p : cohort.patients)
            if (gamma_draw(seed, j, p.patient_id) <= inclusion) ++omega;
        out.info.omega_size = omega;
        if (omega == 0) {
            out.info.skipped = true;
            return;
        }

        PatientFilter filter = [seed, j, inclusion](int64_t patient_id) {
            return gamma_draw(seed, j, patient_id) <= inclusion;
        };
        std::optional<WeightKernel> wk;
        if (kernel) wk = WeightKernel::make(*kernel, delta);

        CountTables tables = count(cohort, delta, wk, m, first_era_only, filter, 1);
        out.s_per_config.reserve(rating_configs.size());
        for (const RatingConfig& rc : rating_configs)
            out.s_per_config.push_back(cumulate(rate_all(tables, rc, scope)));

        out.info.wall_ms = std::chrono::duration<double, std::milli>(
                               std::chrono::steady_clock::now() - started)
                               .count();
    };

    if (workers <= 1 || k == 1) {
        for (int32_t j = 1; j <= k; ++j) run_replicate(j);
    } else {
        std::atomic<int32_t> next{1};
        auto worker = [&] {
            for (int32_t j = next.fetch_add(1); j <= k; j = next.fetch_add(1)) run_replicate(j);
        };
        std::vector<std::thread> pool;
        const int pool_size = std::min<int>(workers, k);
        pool.reserve(size_t(pool_size));
        for (int w = 0; w < pool_size; ++w) pool.emplace_back(worker);
        for (std::thread& th : pool) th.join();
    }

    BagResult result;
    result.replicates.reserve(size_t(k));
    for (const ReplicateOutput& out : outputs) result.replicates.push_back(out.info);
    result.k_effective = 0;
    for (const ReplicateOutput& out : outputs)
        if (!out.info.skipped) ++result.k_effective;
    if (result.k_effective == 0)
        throw DataError("bag: every replicate drew an empty patient subset");

    // Average in ascending replicate order; that order, not the scheduling,
    // fixes the floating-point result.
    result.z_per_config.resize(rating_configs.size());
    for (size_t cfg = 0; cfg < rating_configs.size(); ++cfg) {
        std::vector<std::unordered_map<uint64_t, double>> acc;
        acc.resize(size_t(m));
        for (const ReplicateOutput& out : outputs) {
            if (out.info.skipped) continue;
            for (size_t y = 0; y < size_t(m); ++y)
                for (const auto& [key, value] : out.s_per_config[cfg][y].scores)
                    acc[y][key] += value;
        }
        std::vector<RatingMatrix>& z = result.z_per_config[cfg];
        z.reserve(size_t(m));
        const double k_eff = double(result.k_effective);
        for (size_t y = 0; y < size_t(m); ++y) {
            RatingMatrix zy;
            zy.scope = scope;
            zy.tag = SubintervalTag{SubintervalTag::Kind::cumulative, int32_t(y) + 1};
            zy.scores.reserve(acc[y].size());
            for (const auto& [key, sum] : acc[y]) zy.scores.emplace(key, sum / k_eff);
            z.push_back(std::move(zy));
        }
    }
    return result;
}

std::vector<RatingMatrix> bag(const Cohort& cohort,
                              const RatingConfig& rating_config,
                              const BagConfig& bag_config,
                              int32_t m,
                              const std::optional<KernelShape>& kernel,
                              bool first_era_only,
                              const ScopePtr& scope,
                              int workers) {
    return bag_many(cohort, {rating_config}, bag_config, m, kernel, first_era_only, scope,
                    workers)
        .z_per_config[0];
}

namespace {

void check_same_scope(const RatingMatrix& a, const RatingMatrix& b, const char* what) {
    if (!a.scope || !b.scope || !(*a.scope == *b.scope))
        throw DataError(std::string(what) + ": rating matrices have mismatched scopes");
}

// Union of both key sets; keys missing from one side rank there with score 0.
std::vector<uint64_t> key_union(const RatingMatrix& a, const RatingMatrix& b) {
    std::vector<uint64_t> keys;
    keys.reserve(a.scores.size() + b.scores.size());
    for (const auto& [key, _] : a.scores) keys.push_back(key);
    for (const auto& [key, _] : b.scores)
        if (!a.scores.count(key)) keys.push_back(key);
    std::sort(keys.begin(), keys.end());
    return keys;
}

}  // namespace

RatingMatrix scale_adjust(const RatingMatrix& source, const RatingMatrix& target) {
    check_same_scope(source, target, "scale_adjust");
    std::vector<uint64_t> keys = key_union(source, target);

    std::vector<uint64_t> by_source = keys;
    std::sort(by_source.begin(), by_source.end(), [&](uint64_t a, uint64_t b) {
        double sa = source.at(a), sb = source.at(b);
        if (sa != sb) return sa > sb;
        return a < b;
    });

    std::vector<double> target_scores;
    target_scores.reserve(keys.size());
    for (uint64_t key : keys) target_scores.push_back(target.at(key));
    std::sort(target_scores.begin(), target_scores.end(), std::greater<double>());

    RatingMatrix out;
    out.scope = source.scope;
    out.tag = source.tag;
    out.scores.reserve(keys.size());
    for (size_t rank = 0; rank < by_source.size(); ++rank)
        out.scores.emplace(by_source[rank], target_scores[rank]);
    return out;
}

RatingMatrix fuse(const RatingMatrix& dpa1, const RatingMatrix& dpa2,
                  const EnsembleConfig& config) {
    config.check();
    check_same_scope(dpa1, dpa2, "fuse");
    const RatingMatrix adjusted = scale_adjust(dpa1, dpa2);

    RatingMatrix out;
    out.scope = dpa2.scope;
    out.tag = dpa2.tag;
    out.scores.reserve(adjusted.scores.size());
    for (uint64_t key : key_union(adjusted, dpa2))
        out.scores.emplace(key,
                           config.tau * adjusted.at(key) + (1.0 - config.tau) * dpa2.at(key));
    return out;
}

void write_run_report(const std::vector<ReplicateInfo>& replicates, const std::string& path) {
    csv::Writer writer(path, "j,delta,omega_size,skipped,wall_ms");
    for (const ReplicateInfo& r : replicates) {
        char wall[32];
        std::snprintf(wall, sizeof(wall), "%.3f", r.wall_ms);
        writer.stream() << r.j << ',' << r.delta << ',' << r.omega_size << ','
                        << (r.skipped ? 1 : 0) << ',' << wall << '\n';
    }
    writer.close();
}

}  // namespace sigdet
