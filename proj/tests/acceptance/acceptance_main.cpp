// Acceptance suite: one pass/fail line per criterion, nonzero exit when a
// blocking criterion fails. Criterion 7 is a soft ordering check (a failure
// prints an analysis instead of rejecting) and criterion 10 is an advisory
// throughput target.

#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>

#include "sigdet/cli.hpp"
#include "sigdet/cohort_io.hpp"
#include "sigdet/ensemble.hpp"
#include "sigdet/evaluation.hpp"
#include "sigdet/synth.hpp"
#include "support/oracles.hpp"
#include "support/tempdir.hpp"

namespace fs = std::filesystem;
using namespace sigdet;
using namespace sigdet::testing;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

// Shared recovery-scale generator configuration (criterion 6).
GenConfig recovery_config(uint64_t seed) {
    GenConfig config;
    config.n_patients = 20000;
    config.n_drugs = 50;
    config.n_conditions = 40;
    config.years = 10;
    config.n_spiked = 10;
    config.effect_prob = 0.5;
    config.lag_min_days = 3;
    config.lag_max_days = 20;
    config.drug_rate = 2.0;
    config.cond_rate = 5.0;
    config.seed = seed;
    return config;
}

bool criterion_counting_oracle(std::string& detail) {
    const auto start = Clock::now();
    std::mt19937 rng(101);
    int integer_runs = 0, kernel_runs = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const int32_t m_choices[] = {1, 2, 5, 10};
        const int32_t m = m_choices[trial % 4];
        Cohort cohort = random_micro_cohort(rng, TimeAxis{3650, 365});
        const int32_t delta = int32_t(rng() % 80);
        const bool first_era = (rng() % 2) == 0;
        PatientFilter filter;
        if (trial % 3 == 1) filter = [](int64_t id) { return id % 2 == 1; };

        std::optional<WeightKernel> kernel;
        if (trial % 2 == 1) {
            int32_t peak_end = delta == 0 ? 0 : int32_t(rng() % uint32_t(delta + 1));
            int32_t peak_start = peak_end == 0 ? 0 : int32_t(rng() % uint32_t(peak_end + 1));
            kernel = WeightKernel::make(KernelShape{0.25, peak_start, peak_end}, delta);
        }

        CountTables fast = count(cohort, delta, kernel, m, first_era, filter, 1 + trial % 3);
        CountTables oracle = brute_force_count(cohort, delta, kernel, m, first_era, filter);
        if (!tables_equal(fast, oracle, kernel ? 1e-12 : 0.0)) {
            detail = "mismatch against the brute-force oracle at trial " + std::to_string(trial);
            return false;
        }
        kernel ? ++kernel_runs : ++integer_runs;
    }
    const double elapsed = seconds_since(start);
    std::ostringstream out;
    out << integer_runs << " integer + " << kernel_runs << " kernel-weighted cohorts match, "
        << elapsed << " s";
    detail = out.str();
    return elapsed < 10.0;
}

bool criterion_rating_formula(std::string& detail) {
    std::mt19937 rng(102);
    std::uniform_real_distribution<double> value(0.0, 50.0);
    std::uniform_real_distribution<double> alpha_dist(0.1, 0.5);

    const Transform log_t{Transform::Kind::natural_log, 0.5};
    const Transform pow_t{Transform::Kind::power, 0.5};
    std::vector<double> log_scores, pow_scores;
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const double n = value(rng), b = value(rng), alpha = alpha_dist(rng);
        const double impl_log = shrunk_rating(n, b, alpha, log_t);
        const double impl_pow = shrunk_rating(n, b, alpha, pow_t);
        // Independent route: difference of logs, and exp of the half-log.
        const double direct_log = std::log(n + alpha) - std::log(b + alpha);
        const double direct_pow = std::exp(0.5 * (std::log(n + alpha) - std::log(b + alpha)));
        worst = std::max({worst, std::abs(impl_log - direct_log),
                          std::abs(impl_pow - direct_pow)});
        log_scores.push_back(impl_log);
        pow_scores.push_back(impl_pow);
    }
    if (worst >= 1e-12) {
        detail = "worst deviation " + std::to_string(worst) + " exceeds 1e-12";
        return false;
    }
    auto argsort = [](const std::vector<double>& v) {
        std::vector<size_t> idx(v.size());
        std::iota(idx.begin(), idx.end(), size_t(0));
        std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) {
            if (v[a] != v[b]) return v[a] > v[b];
            return a < b;
        });
        return idx;
    };
    if (argsort(log_scores) != argsort(pow_scores)) {
        detail = "log and power transforms ranked the triples differently";
        return false;
    }
    std::ostringstream out;
    out << "1000 triples, worst deviation " << worst << ", identical argsort";
    detail = out.str();
    return true;
}

bool criterion_cumulate_oracle(std::string& detail) {
    std::mt19937 rng(103);
    std::uniform_real_distribution<double> value(-4.0, 4.0);
    ScopePtr scope = make_scope({1, 2, 3, 4, 5, 6, 7}, {1, 2, 3, 4, 5, 6, 7});

    for (int trial = 0; trial < 50; ++trial) {
        const int years = 1 + int(rng() % 10);
        std::vector<RatingMatrix> r;
        r.resize(size_t(years));
        for (int y = 0; y < years; ++y) {
            r[size_t(y)].scope = scope;
            r[size_t(y)].tag = SubintervalTag{SubintervalTag::Kind::per_interval, y + 1};
            for (int32_t d = 1; d <= 7; ++d)
                for (int32_t c = 1; c <= 7; ++c)
                    if (rng() % 3 != 0) r[size_t(y)].scores[pair_key(d, c)] = value(rng);
        }
        std::vector<RatingMatrix> s = cumulate(r);

        if (s[0].scores != r[0].scores) {
            detail = "s(1) differs from r(1)";
            return false;
        }
        // Prefix-mean oracle: per key, sum the yearly values in ascending
        // order and divide by the year count.
        for (int y = 0; y < years; ++y) {
            std::map<uint64_t, double> expected;
            for (int i = 0; i <= y; ++i)
                for (int32_t d = 1; d <= 7; ++d)
                    for (int32_t c = 1; c <= 7; ++c) {
                        uint64_t key = pair_key(d, c);
                        auto it = r[size_t(i)].scores.find(key);
                        expected[key] += it == r[size_t(i)].scores.end() ? 0.0 : it->second;
                    }
            size_t nonzero = 0;
            for (auto& [key, sum] : expected) {
                const double want = sum / double(y + 1);
                const double got = s[size_t(y)].at(key);
                if (s[size_t(y)].scores.count(key)) ++nonzero;
                const bool key_present = s[size_t(y)].scores.count(key) != 0;
                if ((key_present && got != want) || (!key_present && want != 0.0)) {
                    detail = "prefix-mean mismatch at year " + std::to_string(y + 1);
                    return false;
                }
            }
            if (nonzero != s[size_t(y)].scores.size()) {
                detail = "cumulative matrix carries unexpected keys";
                return false;
            }
        }
    }
    detail = "50 random matrix stacks match the prefix-mean oracle exactly";
    return true;
}

bool criterion_degenerate_bagging(std::string& detail) {
    GenConfig gen = recovery_config(7);
    gen.n_patients = 2000;
    Cohort cohort = generate(gen).cohort;
    ScopePtr scope = make_scope(cohort.drug_universe, cohort.condition_universe);

    BagConfig bag_config;
    bag_config.k = 1;
    bag_config.inclusion_prob = 1.0;
    bag_config.delta_min = bag_config.delta_max = 40;
    bag_config.seed = 11;

    RatingConfig dpa1;
    RatingConfig dpa2;
    dpa2.model = ExposureModel::duration;
    BagResult bagged = bag_many(cohort, {dpa1, dpa2}, bag_config, 10, std::nullopt, true, scope);

    CountTables tables = count(cohort, 40, std::nullopt, 10, true);
    std::vector<RatingMatrix> s1 = cumulate(rate_all(tables, dpa1, scope));
    std::vector<RatingMatrix> s2 = cumulate(rate_all(tables, dpa2, scope));

    for (int y = 0; y < 10; ++y) {
        if (bagged.z_per_config[0][size_t(y)].scores != s1[size_t(y)].scores ||
            bagged.z_per_config[1][size_t(y)].scores != s2[size_t(y)].scores) {
            detail = "bit-level mismatch at year " + std::to_string(y + 1);
            return false;
        }
    }
    detail = "k=1, inclusion 1.0, fixed delta reproduces the direct pipeline bit for bit";
    return true;
}

bool criterion_variance_reduction(std::string& detail) {
    const auto start = Clock::now();
    Cohort cohort = generate(recovery_config(1)).cohort;
    ScopePtr scope = make_scope(cohort.drug_universe, cohort.condition_universe);
    RatingConfig dpa1;

    // Pairs with any observed count on the full cohort at the widest window.
    std::vector<uint64_t> tracked;
    {
        CountTables tables = count(cohort, 60, std::nullopt, 10, true, {}, 2);
        std::unordered_set<uint64_t> seen;
        for (int32_t i = 0; i < tables.m; ++i)
            for (const auto& [key, n_dc] : tables.pair_counts[size_t(i)])
                if (n_dc > 0) seen.insert(key);
        tracked.assign(seen.begin(), seen.end());
        std::sort(tracked.begin(), tracked.end());
    }

    auto final_year_scores = [&](int32_t k, uint64_t seed) {
        BagConfig bag_config;
        bag_config.k = k;
        bag_config.seed = seed;
        std::vector<RatingMatrix> z =
            bag(cohort, dpa1, bag_config, 10, std::nullopt, true, scope, 2);
        return z.back();
    };

    const int n_seeds = 10;
    std::vector<RatingMatrix> z1, z25;
    for (int seed = 1; seed <= n_seeds; ++seed) {
        z1.push_back(final_year_scores(1, uint64_t(seed)));
        z25.push_back(final_year_scores(25, uint64_t(seed)));
    }

    auto variance = [&](const std::vector<RatingMatrix>& runs, uint64_t key) {
        double mean = 0.0;
        for (const RatingMatrix& m : runs) mean += m.at(key);
        mean /= double(runs.size());
        double var = 0.0;
        for (const RatingMatrix& m : runs) {
            const double d = m.at(key) - mean;
            var += d * d;
        }
        return var / double(runs.size());
    };

    size_t reduced = 0;
    for (uint64_t key : tracked)
        if (variance(z25, key) <= variance(z1, key)) ++reduced;
    const double fraction = double(reduced) / double(tracked.size());
    const double elapsed = seconds_since(start);

    std::ostringstream out;
    out << "k=25 variance <= k=1 variance for " << reduced << "/" << tracked.size()
        << " pairs (" << fraction * 100.0 << "%), " << elapsed << " s";
    detail = out.str();
    return fraction >= 0.95 && elapsed < 600.0;
}

bool criterion_signal_recovery(std::string& detail) {
    const auto start = Clock::now();
    GenResult data = generate(recovery_config(1));
    ScopePtr scope = make_scope(data.cohort.drug_universe, data.cohort.condition_universe);

    BagConfig bag_config;  // k reduced to 20 to stay inside the runtime budget
    bag_config.k = 20;
    bag_config.seed = 1;
    RatingConfig dpa1;
    std::vector<RatingMatrix> z =
        bag(data.cohort, dpa1, bag_config, 10, std::nullopt, true, scope, 2);

    std::vector<RankedEntry> ranking = ranked_entries(z.back());
    size_t worst_rank = 0;
    for (size_t rank = 1; rank <= ranking.size(); ++rank) {
        const RankedEntry& e = ranking[rank - 1];
        if (data.truth.positives.count(pair_key(e.drug_id, e.condition_id)))
            worst_rank = std::max(worst_rank, rank);
    }
    size_t found = 0;
    for (size_t rank = 1; rank <= std::min<size_t>(40, ranking.size()); ++rank) {
        const RankedEntry& e = ranking[rank - 1];
        if (data.truth.positives.count(pair_key(e.drug_id, e.condition_id))) ++found;
    }

    MapByYear map = map_by_year(z, data.truth);
    const double elapsed = seconds_since(start);

    std::ostringstream out;
    out << found << "/10 spiked pairs in the top 40 of " << ranking.size()
        << " (worst rank " << worst_rank << "), mean AP " << map.mean << ", " << elapsed
        << " s";
    detail = out.str();
    return found == 10 && map.mean >= 0.5 && elapsed < 300.0;
}

bool criterion_ensemble_ordering(std::string& detail) {
    double sum_dpa1 = 0.0, sum_dpa2 = 0.0, sum_ens = 0.0;
    const int n_seeds = 5;
    for (int seed = 1; seed <= n_seeds; ++seed) {
        GenResult data = generate(recovery_config(uint64_t(seed)));
        ScopePtr scope = make_scope(data.cohort.drug_universe, data.cohort.condition_universe);

        BagConfig bag_config;
        bag_config.k = 20;
        bag_config.seed = uint64_t(seed);
        RatingConfig dpa1;
        RatingConfig dpa2;
        dpa2.model = ExposureModel::duration;
        BagResult bagged =
            bag_many(data.cohort, {dpa1, dpa2}, bag_config, 10, std::nullopt, true, scope, 2);

        EnsembleConfig ens_config{0.3};
        std::vector<RatingMatrix> ens;
        for (int y = 0; y < 10; ++y)
            ens.push_back(
                fuse(bagged.z_per_config[0][size_t(y)], bagged.z_per_config[1][size_t(y)],
                     ens_config));

        sum_dpa1 += map_by_year(bagged.z_per_config[0], data.truth).mean;
        sum_dpa2 += map_by_year(bagged.z_per_config[1], data.truth).mean;
        sum_ens += map_by_year(ens, data.truth).mean;
    }
    const double dpa1 = sum_dpa1 / n_seeds, dpa2 = sum_dpa2 / n_seeds, ens = sum_ens / n_seeds;
    const double weaker = std::min(dpa1, dpa2), stronger = std::max(dpa1, dpa2);

    std::ostringstream out;
    out << "mean AP over " << n_seeds << " seeds: dpa1 " << dpa1 << ", dpa2 " << dpa2
        << ", ens " << ens;
    detail = out.str();
    return ens >= weaker && ens >= stronger - 0.05;
}

bool criterion_ap_oracle(std::string& detail) {
    std::mt19937 rng(108);
    std::uniform_real_distribution<double> value(0.0, 1.0);
    for (int trial = 0; trial < 1000; ++trial) {
        GroundTruth truth;
        std::vector<RankedEntry> entries;
        const int n = 5 + int(rng() % 120);
        for (int32_t i = 0; i < n; ++i) {
            entries.push_back(RankedEntry{i / 10 + 1, i % 10 + 1, value(rng)});
            if (rng() % 4 == 0) truth.positives.insert(pair_key(i / 10 + 1, i % 10 + 1));
        }
        if (truth.positives.empty()) truth.positives.insert(pair_key(1, 1));
        sort_ranked(entries);
        if (average_precision(entries, truth) != ap_prefix_oracle(entries, truth)) {
            detail = "AP differs from the prefix-precision oracle at trial " +
                     std::to_string(trial);
            return false;
        }
    }

    // The three hand examples.
    auto list_of = [](const std::string& pattern, GroundTruth& truth) {
        std::vector<RankedEntry> entries;
        for (size_t i = 0; i < pattern.size(); ++i) {
            int32_t drug = pattern[i] == 'P' ? 1 : 2;
            entries.push_back(RankedEntry{drug, int32_t(i + 1), double(pattern.size() - i)});
            if (pattern[i] == 'P') truth.positives.insert(pair_key(drug, int32_t(i + 1)));
        }
        return entries;
    };
    {
        GroundTruth truth;
        auto ranked = list_of("PNPN", truth);
        if (std::abs(average_precision(ranked, truth) - 5.0 / 6.0) > 1e-15) {
            detail = "hand example PNPN failed";
            return false;
        }
    }
    {
        GroundTruth truth;
        auto ranked = list_of("PPPNN", truth);
        if (average_precision(ranked, truth) != 1.0) {
            detail = "hand example with leading positives failed";
            return false;
        }
    }
    {
        GroundTruth truth;
        auto ranked = list_of("NPNP", truth);
        if (std::abs(average_precision(ranked, truth) - 0.5) > 1e-15) {
            detail = "hand example NPNP failed";
            return false;
        }
    }
    detail = "1000 random rankings equal the prefix-precision oracle; hand examples hold";
    return true;
}

bool criterion_determinism(std::string& detail) {
    TempDir root;
    auto run_pipeline = [&](int workers) {
        fs::remove_all(root.str("data"));
        fs::remove_all(root.str("out"));
        std::vector<std::string> overrides = {
            "gen.n_patients=20000", "gen.n_drugs=50", "gen.n_conditions=40",
            "gen.n_spiked=10",      "gen.seed=1",     "gen.effect_prob=0.5",
            "bag.k=20",             "bag.seed=1",     "run.data_dir=" + root.str("data"),
            "run.out_dir=" + root.str("out"),
            "run.workers=" + std::to_string(workers),
        };
        return cli::run("pipeline", "", overrides) == 0;
    };
    auto snap = [&](const std::vector<std::string>& skip) {
        std::map<std::string, std::string> files;
        for (const char* sub : {"data", "out"})
            for (const auto& entry : fs::recursive_directory_iterator(root.str(sub))) {
                if (!entry.is_regular_file()) continue;
                std::string name =
                    std::string(sub) + "/" + entry.path().filename().string();
                bool skipped = false;
                for (const std::string& s : skip)
                    if (name == s) skipped = true;
                if (!skipped) files[name] = read_file(entry.path().string());
            }
        return files;
    };
    // run_report.csv carries wall-clock timings; for the worker sweep the
    // echoed config legitimately differs in its workers line. Neither is a
    // derived data product.
    const std::vector<std::string> skip_timing = {"out/run_report.csv"};
    const std::vector<std::string> skip_workers = {"out/run_report.csv",
                                                   "out/resolved_config.ini"};

    if (!run_pipeline(1)) {
        detail = "pipeline run failed";
        return false;
    }
    const auto first = snap(skip_timing);
    const auto base = snap(skip_workers);

    if (!run_pipeline(1)) {
        detail = "pipeline rerun failed";
        return false;
    }
    if (snap(skip_timing) != first) {
        detail = "rerun with identical config changed at least one output byte";
        return false;
    }
    for (int workers : {4, 8}) {
        if (!run_pipeline(workers)) {
            detail = "pipeline run with " + std::to_string(workers) + " workers failed";
            return false;
        }
        if (snap(skip_workers) != base) {
            detail = "worker count " + std::to_string(workers) +
                     " changed at least one output byte";
            return false;
        }
    }
    detail = "rerun and worker counts {1,4,8} byte-identical (" +
             std::to_string(base.size()) +
             " files; run_report wall-clock column and the echoed workers line excluded)";
    return true;
}

bool criterion_throughput(std::string& detail) {
    GenConfig gen;
    gen.n_patients = 100000;
    gen.n_drugs = 100;
    gen.n_conditions = 80;
    gen.n_spiked = 0;
    gen.drug_rate = 2.0;
    gen.cond_rate = 4.0;  // ~20 events per patient with partial observation
    gen.seed = 3;
    Cohort cohort = generate(gen).cohort;

    uint64_t events = 0;
    for (const PatientRecord& p : cohort.patients)
        events += p.drug_eras.size() + p.conditions.size();

    const auto start = Clock::now();
    CountTables tables = count(cohort, 40, std::nullopt, 10, true, {}, 4);
    const double elapsed = seconds_since(start);

    int64_t total = 0;
    for (int32_t i = 0; i < tables.m; ++i) total += tables.era_total[size_t(i)];

    std::ostringstream out;
    out << "count() over " << cohort.patients.size() << " patients / " << events
        << " events took " << elapsed << " s (" << total << " first eras)";
    detail = out.str();
    return elapsed < 60.0;
}

struct Criterion {
    int id;
    const char* name;
    std::function<bool(std::string&)> body;
    bool advisory = false;  // never blocks
    bool soft = false;      // failure needs analysis, not rejection
};

}  // namespace

int main(int argc, char** argv) {
    int only = 0;
    if (argc == 3 && std::strcmp(argv[1], "--only") == 0) only = std::atoi(argv[2]);

    const Criterion criteria[] = {
        {1, "counting oracle equivalence", criterion_counting_oracle},
        {2, "rating formula checks", criterion_rating_formula},
        {3, "temporal aggregation", criterion_cumulate_oracle},
        {4, "degenerate-bagging equivalence", criterion_degenerate_bagging},
        {5, "bagging variance reduction", criterion_variance_reduction},
        {6, "synthetic signal recovery", criterion_signal_recovery},
        {7, "ensemble ordering check", criterion_ensemble_ordering, false, true},
        {8, "AP/MAP oracle", criterion_ap_oracle},
        {9, "determinism across runs and workers", criterion_determinism},
        {10, "throughput engineering target", criterion_throughput, true},
    };

    bool blocking_failure = false;
    for (const Criterion& criterion : criteria) {
        if (only != 0 && criterion.id != only) continue;
        std::string detail;
        bool ok = false;
        try {
            ok = criterion.body(detail);
        } catch (const std::exception& e) {
            detail = std::string("exception: ") + e.what();
        }
        const char* verdict = ok ? "PASS" : (criterion.advisory ? "ADVISORY-FAIL"
                                             : criterion.soft    ? "SOFT-FAIL"
                                                                 : "FAIL");
        std::cout << verdict << " criterion " << criterion.id << " (" << criterion.name
                  << "): " << detail << "\n";
        if (!ok && criterion.soft)
            std::cout << "      analysis: the fused ensemble under-performed the stated band"
                         " on this synthetic cohort; how much the blend helps is"
                         " data-dependent and this criterion is explicitly soft. Inspect the"
                         " per-method mean APs above.\n";
        if (!ok && !criterion.advisory && !criterion.soft) blocking_failure = true;
    }
    return blocking_failure ? 1 : 0;
}
