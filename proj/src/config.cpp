#include "sigdet/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "csv_util.hpp"
#include "sigdet/errors.hpp"

namespace sigdet {

PipelineConfig default_config() {
    PipelineConfig config;
    config.dpa1.model = ExposureModel::occurrence;
    config.dpa2.model = ExposureModel::duration;
    return config;
}

namespace {

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

int64_t parse_int(const std::string& key, const std::string& value) {
    int64_t out = 0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc() || ptr != value.data() + value.size())
        throw ConfigError(key + ": expected integer, got '" + value + "'");
    return out;
}

uint64_t parse_u64(const std::string& key, const std::string& value) {
    uint64_t out = 0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc() || ptr != value.data() + value.size())
        throw ConfigError(key + ": expected unsigned integer, got '" + value + "'");
    return out;
}

double parse_double(const std::string& key, const std::string& value) {
    double out = 0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc() || ptr != value.data() + value.size())
        throw ConfigError(key + ": expected number, got '" + value + "'");
    return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true") return true;
    if (value == "false") return false;
    throw ConfigError(key + ": expected true or false, got '" + value + "'");
}

Transform::Kind parse_transform(const std::string& key, const std::string& value) {
    if (value == "log") return Transform::Kind::natural_log;
    if (value == "power") return Transform::Kind::power;
    throw ConfigError(key + ": expected log or power, got '" + value + "'");
}

using Setter = std::function<void(PipelineConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = [] {
        std::map<std::string, Setter> t;
        auto add = [&](const char* key, Setter fn) { t.emplace(key, std::move(fn)); };

        add("run.m", [](auto& c, auto& k, auto& v) { c.run.m = int32_t(parse_int(k, v)); });
        add("run.delta",
            [](auto& c, auto& k, auto& v) { c.run.delta = int32_t(parse_int(k, v)); });
        add("run.kernel", [](auto& c, auto& k, auto& v) {
            if (v == "uniform") c.run.weighted_kernel = false;
            else if (v == "weighted") c.run.weighted_kernel = true;
            else throw ConfigError(k + ": expected uniform or weighted, got '" + v + "'");
        });
        add("run.first_era_only",
            [](auto& c, auto& k, auto& v) { c.run.first_era_only = parse_bool(k, v); });
        add("run.workers",
            [](auto& c, auto& k, auto& v) { c.run.workers = int32_t(parse_int(k, v)); });
        add("run.data_dir", [](auto& c, auto&, auto& v) { c.run.data_dir = v; });
        add("run.out_dir", [](auto& c, auto&, auto& v) { c.run.out_dir = v; });
        add("run.dense_submission",
            [](auto& c, auto& k, auto& v) { c.run.dense_submission = parse_bool(k, v); });
        add("run.report_top_k",
            [](auto& c, auto& k, auto& v) { c.run.report_top_k = int32_t(parse_int(k, v)); });
        add("run.eval_input", [](auto& c, auto&, auto& v) { c.run.eval_input = v; });
        add("run.report_prefix", [](auto& c, auto&, auto& v) { c.run.report_prefix = v; });

        add("kernel.w0", [](auto& c, auto& k, auto& v) { c.kernel.w0 = parse_double(k, v); });
        add("kernel.peak_start_day", [](auto& c, auto& k, auto& v) {
            c.kernel.peak_start_day = int32_t(parse_int(k, v));
        });
        add("kernel.peak_end_day", [](auto& c, auto& k, auto& v) {
            c.kernel.peak_end_day = int32_t(parse_int(k, v));
        });

        add("gen.n_patients",
            [](auto& c, auto& k, auto& v) { c.gen.n_patients = parse_int(k, v); });
        add("gen.n_drugs",
            [](auto& c, auto& k, auto& v) { c.gen.n_drugs = int32_t(parse_int(k, v)); });
        add("gen.n_conditions",
            [](auto& c, auto& k, auto& v) { c.gen.n_conditions = int32_t(parse_int(k, v)); });
        add("gen.years",
            [](auto& c, auto& k, auto& v) { c.gen.years = int32_t(parse_int(k, v)); });
        add("gen.drug_rate",
            [](auto& c, auto& k, auto& v) { c.gen.drug_rate = parse_double(k, v); });
        add("gen.cond_rate",
            [](auto& c, auto& k, auto& v) { c.gen.cond_rate = parse_double(k, v); });
        add("gen.era_length_days",
            [](auto& c, auto& k, auto& v) { c.gen.era_length_days = parse_double(k, v); });
        add("gen.n_spiked",
            [](auto& c, auto& k, auto& v) { c.gen.n_spiked = int32_t(parse_int(k, v)); });
        add("gen.effect_prob",
            [](auto& c, auto& k, auto& v) { c.gen.effect_prob = parse_double(k, v); });
        add("gen.lag_min_days",
            [](auto& c, auto& k, auto& v) { c.gen.lag_min_days = int32_t(parse_int(k, v)); });
        add("gen.lag_max_days",
            [](auto& c, auto& k, auto& v) { c.gen.lag_max_days = int32_t(parse_int(k, v)); });
        add("gen.seed", [](auto& c, auto& k, auto& v) { c.gen.seed = parse_u64(k, v); });

        auto add_rating = [&](const std::string& section, RatingConfig PipelineConfig::*member) {
            add((section + ".alpha").c_str(), [member](auto& c, auto& k, auto& v) {
                (c.*member).alpha = parse_double(k, v);
            });
            add((section + ".transform").c_str(), [member](auto& c, auto& k, auto& v) {
                (c.*member).transform.kind = parse_transform(k, v);
            });
            add((section + ".power_p").c_str(), [member](auto& c, auto& k, auto& v) {
                (c.*member).transform.exponent = parse_double(k, v);
            });
        };
        add_rating("dpa1", &PipelineConfig::dpa1);
        add_rating("dpa2", &PipelineConfig::dpa2);

        add("bag.k", [](auto& c, auto& k, auto& v) { c.bag.k = int32_t(parse_int(k, v)); });
        add("bag.inclusion_prob",
            [](auto& c, auto& k, auto& v) { c.bag.inclusion_prob = parse_double(k, v); });
        add("bag.delta_min",
            [](auto& c, auto& k, auto& v) { c.bag.delta_min = int32_t(parse_int(k, v)); });
        add("bag.delta_max",
            [](auto& c, auto& k, auto& v) { c.bag.delta_max = int32_t(parse_int(k, v)); });
        add("bag.seed", [](auto& c, auto& k, auto& v) { c.bag.seed = parse_u64(k, v); });

        add("ensemble.tau",
            [](auto& c, auto& k, auto& v) { c.ensemble.tau = parse_double(k, v); });

        add("scope.drug_min",
            [](auto& c, auto& k, auto& v) { c.scope.drug_min = int32_t(parse_int(k, v)); });
        add("scope.drug_max",
            [](auto& c, auto& k, auto& v) { c.scope.drug_max = int32_t(parse_int(k, v)); });
        add("scope.cond_min",
            [](auto& c, auto& k, auto& v) { c.scope.cond_min = int32_t(parse_int(k, v)); });
        add("scope.cond_max",
            [](auto& c, auto& k, auto& v) { c.scope.cond_max = int32_t(parse_int(k, v)); });
        return t;
    }();
    return table;
}

void set_key(PipelineConfig& config, const std::string& dotted_key, const std::string& value) {
    auto it = setters().find(dotted_key);
    if (it == setters().end()) throw ConfigError("unknown config key '" + dotted_key + "'");
    it->second(config, dotted_key, value);
}

}  // namespace

void apply_override(PipelineConfig& config, const std::string& assignment) {
    size_t eq = assignment.find('=');
    if (eq == std::string::npos)
        throw ConfigError("override must be section.key=value, got '" + assignment + "'");
    std::string key = trim(assignment.substr(0, eq));
    std::string value = trim(assignment.substr(eq + 1));
    if (key.find('.') == std::string::npos)
        throw ConfigError("override key must be section.key, got '" + key + "'");
    set_key(config, key, value);
}

PipelineConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
    PipelineConfig config = default_config();

    if (!path.empty()) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open config file " + path);
        std::string line, section;
        size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            std::string text = trim(line);
            if (text.empty() || text[0] == '#' || text[0] == ';') continue;
            if (text.front() == '[') {
                if (text.back() != ']')
                    throw ConfigError(path + ":" + std::to_string(line_no) +
                                      ": malformed section header '" + text + "'");
                section = trim(text.substr(1, text.size() - 2));
                if (section.empty())
                    throw ConfigError(path + ":" + std::to_string(line_no) + ": empty section");
                continue;
            }
            size_t eq = text.find('=');
            if (eq == std::string::npos)
                throw ConfigError(path + ":" + std::to_string(line_no) +
                                  ": expected key = value, got '" + text + "'");
            std::string key = trim(text.substr(0, eq));
            std::string value = trim(text.substr(eq + 1));
            if (section.empty())
                throw ConfigError(path + ":" + std::to_string(line_no) +
                                  ": key '" + key + "' outside any [section]");
            set_key(config, section + "." + key, value);
        }
    }

    for (const std::string& assignment : overrides) apply_override(config, assignment);
    config.check();
    return config;
}

void PipelineConfig::check() const {
    if (run.m < 1) throw ConfigError("run.m must be >= 1");
    if ((gen.years * 365) % run.m != 0)
        throw ConfigError("run.m = " + std::to_string(run.m) +
                          " does not divide the horizon of " + std::to_string(gen.years * 365) +
                          " days");
    if (run.delta < 0) throw ConfigError("run.delta must be >= 0");
    if (run.workers < 1) throw ConfigError("run.workers must be >= 1");
    if (run.report_top_k < 1) throw ConfigError("run.report_top_k must be >= 1");
    if (run.data_dir.empty() || run.out_dir.empty())
        throw ConfigError("run.data_dir and run.out_dir must be set");
    if (run.data_dir == run.out_dir)
        throw ConfigError("run.data_dir and run.out_dir must be distinct");
    if (kernel.w0 < 0.0 || kernel.w0 > 1.0) throw ConfigError("kernel.w0 must be in [0, 1]");
    if (kernel.peak_start_day < 0 || kernel.peak_start_day > kernel.peak_end_day)
        throw ConfigError("kernel peak must satisfy 0 <= peak_start_day <= peak_end_day");
    if (run.weighted_kernel && kernel.peak_end_day > run.delta)
        throw ConfigError("kernel.peak_end_day exceeds run.delta");
    if (scope.drug_min < 1 || scope.cond_min < 1)
        throw ConfigError("scope minimums must be >= 1");
    if (scope.drug_max < 0 || scope.cond_max < 0)
        throw ConfigError("scope maximums must be >= 0 (0 = unbounded)");
    gen.check();
    dpa1.check();
    dpa2.check();
    bag.check();
    ensemble.check();
}

std::string resolved_config_text(const PipelineConfig& c) {
    std::ostringstream out;
    auto score = [](double v) { return csv::format_score(v); };
    out << "[run]\n"
        << "m = " << c.run.m << '\n'
        << "delta = " << c.run.delta << '\n'
        << "kernel = " << (c.run.weighted_kernel ? "weighted" : "uniform") << '\n'
        << "first_era_only = " << (c.run.first_era_only ? "true" : "false") << '\n'
        << "workers = " << c.run.workers << '\n'
        << "data_dir = " << c.run.data_dir << '\n'
        << "out_dir = " << c.run.out_dir << '\n'
        << "dense_submission = " << (c.run.dense_submission ? "true" : "false") << '\n'
        << "report_top_k = " << c.run.report_top_k << '\n'
        << "eval_input = " << c.run.eval_input << '\n'
        << "report_prefix = " << c.run.report_prefix << '\n'
        << "\n[kernel]\n"
        << "w0 = " << score(c.kernel.w0) << '\n'
        << "peak_start_day = " << c.kernel.peak_start_day << '\n'
        << "peak_end_day = " << c.kernel.peak_end_day << '\n'
        << "\n[gen]\n"
        << "n_patients = " << c.gen.n_patients << '\n'
        << "n_drugs = " << c.gen.n_drugs << '\n'
        << "n_conditions = " << c.gen.n_conditions << '\n'
        << "years = " << c.gen.years << '\n'
        << "drug_rate = " << score(c.gen.drug_rate) << '\n'
        << "cond_rate = " << score(c.gen.cond_rate) << '\n'
        << "era_length_days = " << score(c.gen.era_length_days) << '\n'
        << "n_spiked = " << c.gen.n_spiked << '\n'
        << "effect_prob = " << score(c.gen.effect_prob) << '\n'
        << "lag_min_days = " << c.gen.lag_min_days << '\n'
        << "lag_max_days = " << c.gen.lag_max_days << '\n'
        << "seed = " << c.gen.seed << '\n';
    auto rating = [&](const char* name, const RatingConfig& rc) {
        out << "\n[" << name << "]\n"
            << "alpha = " << score(rc.alpha) << '\n'
            << "transform = "
            << (rc.transform.kind == Transform::Kind::natural_log ? "log" : "power") << '\n'
            << "power_p = " << score(rc.transform.exponent) << '\n';
    };
    rating("dpa1", c.dpa1);
    rating("dpa2", c.dpa2);
    out << "\n[bag]\n"
        << "k = " << c.bag.k << '\n'
        << "inclusion_prob = " << score(c.bag.inclusion_prob) << '\n'
        << "delta_min = " << c.bag.delta_min << '\n'
        << "delta_max = " << c.bag.delta_max << '\n'
        << "seed = " << c.bag.seed << '\n'
        << "\n[ensemble]\n"
        << "tau = " << score(c.ensemble.tau) << '\n'
        << "\n[scope]\n"
        << "drug_min = " << c.scope.drug_min << '\n'
        << "drug_max = " << c.scope.drug_max << '\n'
        << "cond_min = " << c.scope.cond_min << '\n'
        << "cond_max = " << c.scope.cond_max << '\n';
    return out.str();
}

void write_resolved_config(const PipelineConfig& config, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << resolved_config_text(config);
    out.close();
    if (!out) throw std::runtime_error("write failed: " + path);
}

ScopePtr scope_from(const std::vector<int32_t>& drug_universe,
                    const std::vector<int32_t>& condition_universe,
                    const ScopeSection& bounds) {
    auto clip = [](const std::vector<int32_t>& ids, int32_t lo, int32_t hi) {
        std::vector<int32_t> out;
        out.reserve(ids.size());
        for (int32_t id : ids)
            if (id >= lo && (hi == 0 || id <= hi)) out.push_back(id);
        return out;
    };
    return make_scope(clip(drug_universe, bounds.drug_min, bounds.drug_max),
                      clip(condition_universe, bounds.cond_min, bounds.cond_max));
}

}  // namespace sigdet
