#include "sigdet/counting.hpp"

#include <algorithm>
#include <atomic>
#include <cstring>
#include <fstream>
#include <thread>

namespace sigdet {

namespace {

// Fixed block count: partial tables are always merged in ascending block
// order, which pins the floating-point summation order regardless of how
// many workers execute the blocks.
constexpr int kBlocks = 64;

struct DayOccurrence {
    int32_t day;
    int32_t condition_id;
};

void count_patient(const PatientRecord& p,
                   const SubintervalGrid& grid,
                   int32_t delta,
                   const std::optional<WeightKernel>& kernel,
                   bool first_era_only,
                   CountTables& t,
                   std::vector<DayOccurrence>& scratch) {
    for (const ConditionOccurrence& occ : p.conditions)
        t.cond_counts[size_t(grid.index_of(occ.start_day))][occ.condition_id]++;

    if (p.drug_eras.empty()) return;

    // Occurrences re-sorted by day for window scans.
    scratch.clear();
    scratch.reserve(p.conditions.size());
    for (const ConditionOccurrence& occ : p.conditions)
        scratch.push_back(DayOccurrence{occ.start_day, occ.condition_id});
    std::sort(scratch.begin(), scratch.end(), [](const DayOccurrence& a, const DayOccurrence& b) {
        return std::tie(a.day, a.condition_id) < std::tie(b.day, b.condition_id);
    });

    int32_t prev_drug = -1;
    for (const DrugEra& era : p.drug_eras) {
        // Eras are sorted by (drug_id, start_day); under first_era_only the
        // first era of each drug group is the one that survives.
        if (first_era_only) {
            if (era.drug_id == prev_drug) continue;
            prev_drug = era.drug_id;
        }
        const int32_t start_sub = grid.index_of(era.start_day);

        t.drug_counts[size_t(start_sub)][era.drug_id]++;
        t.era_total[size_t(start_sub)]++;

        // Era days split across every subinterval the era overlaps.
        const int32_t end_sub = grid.index_of(era.end_day);
        for (int32_t i = start_sub; i <= end_sub; ++i) {
            int32_t lo = std::max(era.start_day, grid.begin_day(i));
            int32_t hi = (i == grid.m - 1) ? era.end_day
                                           : std::min(era.end_day, grid.end_day(i));
            int64_t days = int64_t(hi - lo + 1);
            t.drug_durations[size_t(i)][era.drug_id] += days;
            t.duration_total[size_t(i)] += days;
        }

        // Window scan: occurrences with 0 <= t_c - t_d <= delta.
        auto it = std::lower_bound(scratch.begin(), scratch.end(), era.start_day,
                                   [](const DayOccurrence& o, int32_t day) { return o.day < day; });
        auto& pairs = t.pair_counts[size_t(start_sub)];
        for (; it != scratch.end() && it->day <= era.start_day + delta; ++it) {
            double w = kernel ? kernel->weight(it->day - era.start_day) : 1.0;
            if (w == 0.0) continue;
            pairs[pair_key(era.drug_id, it->condition_id)] += w;
        }
    }
}

void merge_into(CountTables& acc, const CountTables& part) {
    for (size_t i = 0; i < size_t(acc.m); ++i) {
        for (const auto& [key, value] : part.pair_counts[i]) acc.pair_counts[i][key] += value;
        for (const auto& [id, value] : part.drug_counts[i]) acc.drug_counts[i][id] += value;
        for (const auto& [id, value] : part.cond_counts[i]) acc.cond_counts[i][id] += value;
        for (const auto& [id, value] : part.drug_durations[i])
            acc.drug_durations[i][id] += value;
        acc.era_total[i] += part.era_total[i];
        acc.duration_total[i] += part.duration_total[i];
    }
}

}  // namespace

CountTables CountTables::zero(int32_t m) {
    CountTables t;
    t.m = m;
    t.pair_counts.resize(size_t(m));
    t.drug_counts.resize(size_t(m));
    t.cond_counts.resize(size_t(m));
    t.drug_durations.resize(size_t(m));
    t.era_total.assign(size_t(m), 0);
    t.duration_total.assign(size_t(m), 0);
    return t;
}

CountTables count(const Cohort& cohort,
                  int32_t delta,
                  const std::optional<WeightKernel>& kernel,
                  int32_t m,
                  bool first_era_only,
                  const PatientFilter& filter,
                  int workers) {
    if (delta < 0) throw ConfigError("count: delta must be >= 0");
    if (kernel && kernel->delta != delta)
        throw ConfigError("count: kernel.delta " + std::to_string(kernel->delta) +
                          " does not match delta " + std::to_string(delta));
    const SubintervalGrid grid = SubintervalGrid::over(cohort.axis, m);

    const size_t n = cohort.patients.size();
    const size_t block_size = (n + kBlocks - 1) / kBlocks;

    std::vector<CountTables> partials;
    partials.reserve(kBlocks);
    for (int b = 0; b < kBlocks; ++b) partials.push_back(CountTables::zero(m));

    auto run_block = [&](int b) {
        const size_t lo = size_t(b) * block_size;
        const size_t hi = std::min(n, lo + block_size);
        std::vector<DayOccurrence> scratch;
        for (size_t i = lo; i < hi; ++i) {
            const PatientRecord& p = cohort.patients[i];
            if (filter && !filter(p.patient_id)) continue;
            count_patient(p, grid, delta, kernel, first_era_only, partials[size_t(b)], scratch);
        }
    };

    if (workers <= 1 || n == 0) {
        for (int b = 0; b < kBlocks; ++b) run_block(b);
    } else {
        std::atomic<int> next{0};
        auto worker = [&] {
            for (int b = next.fetch_add(1); b < kBlocks; b = next.fetch_add(1)) run_block(b);
        };
        std::vector<std::thread> pool;
        const int pool_size = std::min(workers, kBlocks);
        pool.reserve(size_t(pool_size));
        for (int w = 0; w < pool_size; ++w) pool.emplace_back(worker);
        for (std::thread& th : pool) th.join();
    }

    CountTables result = CountTables::zero(m);
    for (int b = 0; b < kBlocks; ++b) merge_into(result, partials[size_t(b)]);
    return result;
}

CountTables merge(const CountTables& a, const CountTables& b) {
    if (a.m != b.m)
        throw ConfigError("merge: mismatched subinterval counts " + std::to_string(a.m) +
                          " vs " + std::to_string(b.m));
    CountTables out = a;
    merge_into(out, b);
    return out;
}

namespace {

constexpr char kMagic[4] = {'S', 'D', 'C', 'T'};
constexpr uint32_t kVersion = 1;

template <typename T>
void put(std::ofstream& out, const T& value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::ifstream& in, const std::string& path) {
    T value{};
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in) throw DataError(path + ": truncated counts checkpoint");
    return value;
}

template <typename K, typename V>
void put_map(std::ofstream& out, const std::unordered_map<K, V>& map) {
    std::vector<std::pair<K, V>> entries(map.begin(), map.end());
    std::sort(entries.begin(), entries.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    put(out, uint64_t(entries.size()));
    for (const auto& [key, value] : entries) {
        put(out, key);
        put(out, value);
    }
}

template <typename K, typename V>
void get_map(std::ifstream& in, const std::string& path, std::unordered_map<K, V>& map) {
    uint64_t n = get<uint64_t>(in, path);
    map.reserve(size_t(n));
    for (uint64_t i = 0; i < n; ++i) {
        K key = get<K>(in, path);
        V value = get<V>(in, path);
        map.emplace(key, value);
    }
}

void put_ids(std::ofstream& out, const std::vector<int32_t>& ids) {
    put(out, uint64_t(ids.size()));
    for (int32_t id : ids) put(out, id);
}

std::vector<int32_t> get_ids(std::ifstream& in, const std::string& path) {
    uint64_t n = get<uint64_t>(in, path);
    std::vector<int32_t> ids;
    ids.resize(n);
    for (uint64_t i = 0; i < n; ++i) ids[i] = get<int32_t>(in, path);
    return ids;
}

}  // namespace

void save_counts(const CountsCheckpoint& cp, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out.write(kMagic, 4);
    put(out, kVersion);
    put(out, cp.tables.m);
    put(out, cp.delta);
    put_ids(out, cp.drug_universe);
    put_ids(out, cp.condition_universe);
    for (size_t i = 0; i < size_t(cp.tables.m); ++i) {
        put_map(out, cp.tables.pair_counts[i]);
        put_map(out, cp.tables.drug_counts[i]);
        put_map(out, cp.tables.cond_counts[i]);
        put_map(out, cp.tables.drug_durations[i]);
        put(out, cp.tables.era_total[i]);
        put(out, cp.tables.duration_total[i]);
    }
    out.close();
    if (!out) throw std::runtime_error("write failed: " + path);
}

CountsCheckpoint load_counts(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open counts checkpoint " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw DataError(path + ": not a counts checkpoint");
    uint32_t version = get<uint32_t>(in, path);
    if (version != kVersion)
        throw DataError(path + ": unsupported checkpoint version " + std::to_string(version));

    CountsCheckpoint cp;
    int32_t m = get<int32_t>(in, path);
    if (m < 1) throw DataError(path + ": invalid subinterval count");
    cp.delta = get<int32_t>(in, path);
    cp.drug_universe = get_ids(in, path);
    cp.condition_universe = get_ids(in, path);
    cp.tables = CountTables::zero(m);
    for (size_t i = 0; i < size_t(m); ++i) {
        get_map(in, path, cp.tables.pair_counts[i]);
        get_map(in, path, cp.tables.drug_counts[i]);
        get_map(in, path, cp.tables.cond_counts[i]);
        get_map(in, path, cp.tables.drug_durations[i]);
        cp.tables.era_total[i] = get<int64_t>(in, path);
        cp.tables.duration_total[i] = get<int64_t>(in, path);
    }
    return cp;
}

}  // namespace sigdet
