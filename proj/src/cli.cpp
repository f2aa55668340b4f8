#include "sigdet/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>

#include <CLI11.hpp>

#include "csv_util.hpp"
#include "sigdet/cohort_io.hpp"
#include "sigdet/config.hpp"
#include "sigdet/counting.hpp"
#include "sigdet/ensemble.hpp"
#include "sigdet/errors.hpp"
#include "sigdet/evaluation.hpp"
#include "sigdet/rating.hpp"
#include "sigdet/synth.hpp"

namespace fs = std::filesystem;

namespace sigdet::cli {

namespace {

std::string year_file(const fs::path& dir, const std::string& prefix, int32_t year) {
    char name[64];
    std::snprintf(name, sizeof(name), "%s_y%02d.csv", prefix.c_str(), year);
    return (dir / name).string();
}

Cohort load_data(const PipelineConfig& config) {
    const fs::path dir(config.run.data_dir);
    return load_cohort((dir / "patients.csv").string(), (dir / "drug_eras.csv").string(),
                       (dir / "conditions.csv").string(), config.gen.axis());
}

GroundTruth load_data_truth(const PipelineConfig& config) {
    return load_truth((fs::path(config.run.data_dir) / "truth.csv").string());
}

std::optional<WeightKernel> run_kernel(const PipelineConfig& config) {
    if (!config.run.weighted_kernel) return std::nullopt;
    return WeightKernel::make(config.kernel, config.run.delta);
}

std::optional<KernelShape> bag_kernel(const PipelineConfig& config) {
    if (!config.run.weighted_kernel) return std::nullopt;
    return config.kernel;
}

void echo_config(const PipelineConfig& config) {
    fs::create_directories(config.run.out_dir);
    write_resolved_config(config, (fs::path(config.run.out_dir) / "resolved_config.ini").string());
}

void write_matrix_set(const std::vector<RatingMatrix>& matrices, const fs::path& dir,
                      const std::string& prefix) {
    for (size_t y = 0; y < matrices.size(); ++y)
        write_matrix_csv(matrices[y], year_file(dir, prefix, int32_t(y) + 1));
}

// Loads <prefix>_y01..m, giving every year the same scope (the union of ids
// seen anywhere in the set or in `extra`, when supplied).
std::vector<RatingMatrix> load_matrix_set(const fs::path& dir, const std::string& prefix,
                                          int32_t m) {
    std::vector<RatingMatrix> matrices;
    matrices.reserve(size_t(m));
    for (int32_t y = 1; y <= m; ++y)
        matrices.push_back(load_matrix_csv(year_file(dir, prefix, y), nullptr,
                                           SubintervalTag{SubintervalTag::Kind::cumulative, y}));
    return matrices;
}

void assign_union_scope(std::vector<std::vector<RatingMatrix>*> sets) {
    std::vector<int32_t> drugs, conds;
    for (auto* set : sets)
        for (RatingMatrix& matrix : *set)
            for (const auto& [key, _] : matrix.scores) {
                drugs.push_back(pair_drug(key));
                conds.push_back(pair_condition(key));
            }
    ScopePtr scope = make_scope(std::move(drugs), std::move(conds));
    for (auto* set : sets)
        for (RatingMatrix& matrix : *set) matrix.scope = scope;
}

// Submission rows: year,drug_id,condition_id,score sorted by
// (year, descending score, drug_id, condition_id). Dense emission covers
// the full scope grid with absent pairs scored 0.
void write_submission(const std::vector<RatingMatrix>& per_year, const std::string& path,
                      bool dense) {
    csv::Writer writer(path, "year,drug_id,condition_id,score");
    for (size_t y = 0; y < per_year.size(); ++y) {
        const RatingMatrix& matrix = per_year[y];
        std::vector<RankedEntry> entries;
        if (dense) {
            entries.reserve(matrix.scope->drugs.size() * matrix.scope->conditions.size());
            for (int32_t d : matrix.scope->drugs)
                for (int32_t c : matrix.scope->conditions)
                    entries.push_back(RankedEntry{d, c, matrix.at(pair_key(d, c))});
            sort_ranked(entries);
        } else {
            entries = ranked_entries(matrix);
        }
        for (const RankedEntry& e : entries)
            writer.stream() << (y + 1) << ',' << e.drug_id << ',' << e.condition_id << ','
                            << csv::format_score(e.score) << '\n';
    }
    writer.close();
}

// Figure-style data table: top-K pairs of the final year with their full
// per-year score trajectories.
void write_report(const std::vector<RatingMatrix>& per_year, int32_t top_k,
                  const std::string& path) {
    std::vector<RankedEntry> final_ranking = ranked_entries(per_year.back());
    if (int32_t(final_ranking.size()) > top_k) final_ranking.resize(size_t(top_k));

    std::string header = "rank,drug_id,condition_id";
    for (size_t y = 1; y <= per_year.size(); ++y) header += ",y" + std::to_string(y);
    csv::Writer writer(path, header);
    for (size_t rank = 0; rank < final_ranking.size(); ++rank) {
        const RankedEntry& e = final_ranking[rank];
        writer.stream() << (rank + 1) << ',' << e.drug_id << ',' << e.condition_id;
        for (const RatingMatrix& matrix : per_year)
            writer.stream() << ',' << csv::format_score(matrix.at(pair_key(e.drug_id, e.condition_id)));
        writer.stream() << '\n';
    }
    writer.close();
}

void cmd_generate(const PipelineConfig& config) {
    GenResult result = generate(config.gen);
    write_cohort(result.cohort, result.truth, config.run.data_dir);
    uint64_t eras = 0, conds = 0;
    for (const PatientRecord& p : result.cohort.patients) {
        eras += p.drug_eras.size();
        conds += p.conditions.size();
    }
    std::cout << "generated " << result.cohort.patients.size() << " patients, " << eras
              << " drug eras, " << conds << " condition occurrences ("
              << result.injected_occurrences << " injected) -> " << config.run.data_dir
              << "\n";
}

void cmd_count(const PipelineConfig& config) {
    Cohort cohort = load_data(config);
    CountTables tables = count(cohort, config.run.delta, run_kernel(config), config.run.m,
                               config.run.first_era_only, {}, config.run.workers);
    CountsCheckpoint cp{std::move(tables), cohort.drug_universe, cohort.condition_universe,
                        config.run.delta};
    const std::string path = (fs::path(config.run.out_dir) / "counts.bin").string();
    save_counts(cp, path);
    int64_t total_eras = 0;
    for (int32_t i = 0; i < cp.tables.m; ++i) total_eras += cp.tables.era_total[size_t(i)];
    std::cout << "counted " << cohort.patients.size() << " patients, " << total_eras
              << " era starts across " << cp.tables.m << " subintervals -> " << path << "\n";
}

void cmd_rate(const PipelineConfig& config) {
    const fs::path out_dir(config.run.out_dir);
    CountsCheckpoint cp = load_counts((out_dir / "counts.bin").string());
    ScopePtr scope = scope_from(cp.drug_universe, cp.condition_universe, config.scope);
    write_matrix_set(cumulate(rate_all(cp.tables, config.dpa1, scope)), out_dir, "s_dpa1");
    write_matrix_set(cumulate(rate_all(cp.tables, config.dpa2, scope)), out_dir, "s_dpa2");
    std::cout << "rated " << scope->drugs.size() << " drugs x " << scope->conditions.size()
              << " conditions over " << cp.tables.m << " subintervals -> " << config.run.out_dir
              << "\n";
}

struct BaggedMatrices {
    std::vector<RatingMatrix> dpa1;
    std::vector<RatingMatrix> dpa2;
    std::vector<ReplicateInfo> replicates;
    int32_t k_effective = 0;
};

BaggedMatrices run_bag(const PipelineConfig& config, const Cohort& cohort,
                       const ScopePtr& scope) {
    BagResult result =
        bag_many(cohort, {config.dpa1, config.dpa2}, config.bag, config.run.m,
                 bag_kernel(config), config.run.first_era_only, scope, config.run.workers);
    BaggedMatrices out;
    out.dpa1 = std::move(result.z_per_config[0]);
    out.dpa2 = std::move(result.z_per_config[1]);
    out.replicates = std::move(result.replicates);
    out.k_effective = result.k_effective;
    return out;
}

void cmd_bag(const PipelineConfig& config) {
    Cohort cohort = load_data(config);
    ScopePtr scope = scope_from(cohort.drug_universe, cohort.condition_universe, config.scope);
    BaggedMatrices bagged = run_bag(config, cohort, scope);
    const fs::path out_dir(config.run.out_dir);
    write_matrix_set(bagged.dpa1, out_dir, "z_dpa1");
    write_matrix_set(bagged.dpa2, out_dir, "z_dpa2");
    write_run_report(bagged.replicates, (out_dir / "run_report.csv").string());
    std::cout << "bagged " << bagged.k_effective << "/" << config.bag.k << " replicates -> "
              << config.run.out_dir << "\n";
}

std::vector<RatingMatrix> fuse_years(const std::vector<RatingMatrix>& dpa1,
                                     const std::vector<RatingMatrix>& dpa2,
                                     const EnsembleConfig& config) {
    std::vector<RatingMatrix> ens;
    ens.reserve(dpa1.size());
    for (size_t y = 0; y < dpa1.size(); ++y) ens.push_back(fuse(dpa1[y], dpa2[y], config));
    return ens;
}

void cmd_fuse(const PipelineConfig& config) {
    const fs::path out_dir(config.run.out_dir);
    std::vector<RatingMatrix> dpa1 = load_matrix_set(out_dir, "z_dpa1", config.run.m);
    std::vector<RatingMatrix> dpa2 = load_matrix_set(out_dir, "z_dpa2", config.run.m);
    assign_union_scope({&dpa1, &dpa2});
    std::vector<RatingMatrix> ens = fuse_years(dpa1, dpa2, config.ensemble);
    write_matrix_set(ens, out_dir, "ens");
    std::cout << "fused " << ens.size() << " yearly matrices (tau = " << config.ensemble.tau
              << ") -> " << config.run.out_dir << "\n";
}

void cmd_evaluate(const PipelineConfig& config) {
    const fs::path out_dir(config.run.out_dir);
    const std::string input = config.run.eval_input.empty()
                                  ? (out_dir / "submission.csv").string()
                                  : config.run.eval_input;
    GroundTruth truth = load_data_truth(config);

    std::map<int64_t, std::vector<RankedEntry>> by_year;
    {
        csv::Reader reader(input, "year,drug_id,condition_id,score");
        std::vector<std::string> f;
        while (reader.next(f)) {
            int64_t year = reader.to_int(f[0]);
            if (year < 1)
                throw DataError(reader.where() + ": year must be >= 1");
            by_year[year].push_back(RankedEntry{int32_t(reader.to_int(f[1])),
                                                int32_t(reader.to_int(f[2])),
                                                reader.to_double(f[3])});
        }
    }
    if (by_year.empty()) throw DataError(input + ": no submission rows");

    MapByYear result;
    csv::Writer writer((out_dir / "evaluation.csv").string(), "year,ap");
    double total = 0.0;
    for (auto& [year, entries] : by_year) {
        sort_ranked(entries);
        double ap = average_precision(entries, truth);
        result.per_year.push_back(ap);
        total += ap;
        writer.stream() << year << ',' << csv::format_score(ap) << '\n';
    }
    result.mean = total / double(by_year.size());
    writer.stream() << "mean," << csv::format_score(result.mean) << '\n';
    writer.close();
    std::cout << "evaluated " << input << ": mean AP " << csv::format_score(result.mean)
              << " over " << by_year.size() << " year(s)\n";
}

void cmd_report(const PipelineConfig& config) {
    const fs::path out_dir(config.run.out_dir);
    std::vector<RatingMatrix> matrices =
        load_matrix_set(out_dir, config.run.report_prefix, config.run.m);
    assign_union_scope({&matrices});
    write_report(matrices, config.run.report_top_k, (out_dir / "report.csv").string());
    std::cout << "report for top " << config.run.report_top_k << " pairs of "
              << config.run.report_prefix << " -> " << (out_dir / "report.csv").string() << "\n";
}

void cmd_pipeline(const PipelineConfig& config) {
    Cohort cohort;
    GroundTruth truth;
    if (config.gen.n_patients > 0) {
        GenResult result = generate(config.gen);
        write_cohort(result.cohort, result.truth, config.run.data_dir);
        cohort = std::move(result.cohort);
        truth = std::move(result.truth);
        std::cout << "pipeline: generated " << cohort.patients.size() << " patients\n";
    } else {
        cohort = load_data(config);
        truth = load_data_truth(config);
        std::cout << "pipeline: loaded " << cohort.patients.size() << " patients from "
                  << config.run.data_dir << "\n";
    }

    ScopePtr scope = scope_from(cohort.drug_universe, cohort.condition_universe, config.scope);
    BaggedMatrices bagged = run_bag(config, cohort, scope);
    std::cout << "pipeline: bagged " << bagged.k_effective << "/" << config.bag.k
              << " replicates\n";

    const fs::path out_dir(config.run.out_dir);
    write_matrix_set(bagged.dpa1, out_dir, "z_dpa1");
    write_matrix_set(bagged.dpa2, out_dir, "z_dpa2");
    write_run_report(bagged.replicates, (out_dir / "run_report.csv").string());

    std::vector<RatingMatrix> ens = fuse_years(bagged.dpa1, bagged.dpa2, config.ensemble);
    write_matrix_set(ens, out_dir, "ens");
    write_submission(ens, (out_dir / "submission.csv").string(), config.run.dense_submission);
    write_report(ens, config.run.report_top_k, (out_dir / "report.csv").string());

    struct Entry {
        const char* name;
        const std::vector<RatingMatrix>* matrices;
    };
    for (const Entry& e : {Entry{"dpa1", &bagged.dpa1}, Entry{"dpa2", &bagged.dpa2},
                           Entry{"ens", &ens}}) {
        MapByYear scores = map_by_year(*e.matrices, truth);
        write_eval_csv(scores, (out_dir / (std::string("eval_") + e.name + ".csv")).string());
        std::cout << "pipeline: mean AP " << e.name << " = " << csv::format_score(scores.mean)
                  << "\n";
    }
}

}  // namespace

int run(const std::string& subcommand, const std::string& config_path,
        const std::vector<std::string>& overrides) {
    const std::map<std::string, void (*)(const PipelineConfig&)> commands = {
        {"generate", cmd_generate}, {"count", cmd_count},   {"rate", cmd_rate},
        {"bag", cmd_bag},           {"fuse", cmd_fuse},     {"evaluate", cmd_evaluate},
        {"pipeline", cmd_pipeline}, {"report", cmd_report},
    };
    auto command = commands.find(subcommand);
    if (command == commands.end()) {
        std::cerr << "sigdet: error: usage: unknown subcommand '" << subcommand << "'\n";
        return 1;
    }
    try {
        PipelineConfig config = load_config(config_path, overrides);
        echo_config(config);
        command->second(config);
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "sigdet: error: config: " << e.what() << "\n";
        return 1;
    } catch (const DataError& e) {
        std::cerr << "sigdet: error: data: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "sigdet: error: runtime: " << e.what() << "\n";
        return 3;
    }
}

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"Drug-condition signal detection over longitudinal patient data"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> overrides;
    const std::pair<const char*, const char*> commands[] = {
        {"generate", "Write a synthetic cohort and its ground truth"},
        {"count", "Count events into a per-subinterval checkpoint"},
        {"rate", "Rate a counts checkpoint into cumulative yearly matrices"},
        {"bag", "Bag both estimators over random patient subsets"},
        {"fuse", "Blend the bagged estimators into an ensemble"},
        {"evaluate", "Score a submission file against the ground truth"},
        {"pipeline", "Full chain: generate, bag, fuse, submit, evaluate"},
        {"report", "Top-K pairs with their yearly score trajectories"},
    };
    for (const auto& [name, description] : commands) {
        CLI::App* sub = app.add_subcommand(name, description);
        sub->add_option("-c,--config", config_path, "Config file (defaults apply when omitted)");
        sub->add_option("-s,--set", overrides, "Override, section.key=value (repeatable)");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }
    return run(app.get_subcommands().front()->get_name(), config_path, overrides);
}

}  // namespace sigdet::cli
