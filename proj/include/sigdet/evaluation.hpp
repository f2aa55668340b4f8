#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sigdet/rating.hpp"
#include "sigdet/truth.hpp"

namespace sigdet {

struct RankedEntry {
    int32_t drug_id = 0;
    int32_t condition_id = 0;
    double score = 0.0;
};

// Descending score, ties broken by ascending (drug_id, condition_id); the
// ordering every ranked artifact in this project uses.
void sort_ranked(std::vector<RankedEntry>& entries);

// Present keys of the matrix in ranked order.
std::vector<RankedEntry> ranked_entries(const RatingMatrix& matrix);

// AP = (1/|P|) * sum over positives found in the list of
// (positives at ranks <= rank) / rank. Positives absent from the list
// contribute 0; labeled negatives are treated like any non-positive.
// Throws DataError when truth.positives is empty.
double average_precision(const std::vector<RankedEntry>& ranked, const GroundTruth& truth);

struct MapByYear {
    std::vector<double> per_year;
    double mean = 0.0;
};

// Ranks each year's matrix and scores it by average precision.
MapByYear map_by_year(const std::vector<RatingMatrix>& ratings, const GroundTruth& truth);

// CSV: "year,ap" rows plus a final "mean,<value>" row.
void write_eval_csv(const MapByYear& result, const std::string& path);

}  // namespace sigdet
