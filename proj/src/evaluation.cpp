#include "sigdet/evaluation.hpp"

#include <algorithm>

#include "csv_util.hpp"
#include "sigdet/errors.hpp"

namespace sigdet {

void sort_ranked(std::vector<RankedEntry>& entries) {
    std::sort(entries.begin(), entries.end(), [](const RankedEntry& a, const RankedEntry& b) {
        if (a.score != b.score) return a.score > b.score;
        return std::tie(a.drug_id, a.condition_id) < std::tie(b.drug_id, b.condition_id);
    });
}

std::vector<RankedEntry> ranked_entries(const RatingMatrix& matrix) {
    std::vector<RankedEntry> entries;
    entries.reserve(matrix.scores.size());
    for (const auto& [key, score] : matrix.scores)
        entries.push_back(RankedEntry{pair_drug(key), pair_condition(key), score});
    sort_ranked(entries);
    return entries;
}

double average_precision(const std::vector<RankedEntry>& ranked, const GroundTruth& truth) {
    if (truth.positives.empty())
        throw DataError("average_precision: ground truth has no positive pairs");

    uint64_t positives_seen = 0;
    double sum = 0.0;
    for (size_t rank = 1; rank <= ranked.size(); ++rank) {
        const RankedEntry& e = ranked[rank - 1];
        if (truth.is_positive(e.drug_id, e.condition_id)) {
            ++positives_seen;
            sum += double(positives_seen) / double(rank);
        }
    }
    // Positives absent from the list contribute 0.
    return sum / double(truth.positives.size());
}

MapByYear map_by_year(const std::vector<RatingMatrix>& ratings, const GroundTruth& truth) {
    if (ratings.empty()) throw ConfigError("map_by_year: need at least one rating matrix");
    MapByYear result;
    result.per_year.reserve(ratings.size());
    double total = 0.0;
    for (const RatingMatrix& matrix : ratings) {
        double ap = average_precision(ranked_entries(matrix), truth);
        result.per_year.push_back(ap);
        total += ap;
    }
    result.mean = total / double(ratings.size());
    return result;
}

void write_eval_csv(const MapByYear& result, const std::string& path) {
    csv::Writer writer(path, "year,ap");
    for (size_t y = 0; y < result.per_year.size(); ++y)
        writer.stream() << (y + 1) << ',' << csv::format_score(result.per_year[y]) << '\n';
    writer.stream() << "mean," << csv::format_score(result.mean) << '\n';
    writer.close();
}

}  // namespace sigdet
