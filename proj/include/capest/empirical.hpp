#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "capest/angle.hpp"

namespace capest {

// N x dim matrix of embedding row vectors, row major, double precision.
// Immutable after construction apart from normalize_rows().
class EmbeddingSet {
public:
    // Throws DataError unless rows >= 2 and dim >= 2 and the data size
    // matches. With normalized = true, every row norm must already be within
    // 1e-6 of 1.
    EmbeddingSet(std::vector<double> data, std::size_t rows, std::size_t dim,
                 bool normalized = false);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t dim() const noexcept { return dim_; }
    bool normalized() const noexcept { return normalized_; }

    std::span<const double> row(std::size_t i) const {
        return {data_.data() + i * dim_, dim_};
    }
    const std::vector<double>& data() const noexcept { return data_; }

    // Rows restricted to the given indices, in the given order.
    EmbeddingSet subset(std::span<const std::size_t> row_indices) const;

    friend EmbeddingSet normalize_rows(EmbeddingSet e);

private:
    std::vector<double> data_;
    std::size_t rows_;
    std::size_t dim_;
    bool normalized_;
};

// Scales every row to unit norm. Throws DataError naming the first row whose
// norm is at or below 1e-12.
EmbeddingSet normalize_rows(EmbeddingSet e);

// Fixed-bin counts over the cosine range [-1, 1]. Merges are integer exact,
// so any parallel decomposition produces identical counts.
class ScoreHistogram {
public:
    static constexpr std::size_t kDefaultBinCount = 20001;
    static constexpr double kLo = -1.0;
    static constexpr double kHi = 1.0;

    explicit ScoreHistogram(std::size_t bin_count = kDefaultBinCount);

    std::size_t bin_count() const noexcept { return counts_.size(); }
    double bin_width() const noexcept { return width_; }

    // floor((s - lo) / width), clamped to [0, bin_count - 1].
    std::size_t bin_index(double score) const;
    // Upper edge of bin i, capped at kHi.
    double bin_upper_edge(std::size_t i) const;

    void add(double score);
    void merge(const ScoreHistogram& other);

    std::span<const std::uint64_t> counts() const noexcept { return counts_; }
    std::uint64_t total() const noexcept { return total_; }

private:
    std::vector<std::uint64_t> counts_;
    std::uint64_t total_ = 0;
    double width_;
};

// Histogram of cosine similarities over all N(N-1)/2 unordered row pairs.
// Requires a normalized set. Tiled and internally parallel; counts are
// identical for every thread count. threads == 0 selects the hardware count.
ScoreHistogram pairwise_score_histogram(const EmbeddingSet& e,
                                        std::size_t bin_count = ScoreHistogram::kDefaultBinCount,
                                        unsigned threads = 0);

// Nearest-rank percentile: the upper edge of the smallest-index bin whose
// cumulative count reaches ceil(p/100 * total). p in (0, 100].
double percentile_threshold(const ScoreHistogram& h, double p);

// Smallest bin upper edge t such that the fraction of scores >= t is at most
// far; the (1 - far) quantile of an impostor score distribution.
double far_threshold(const ScoreHistogram& h, double far);

struct PopulationAngle {
    Angle theta;
    double threshold;  // cosine s_th at the requested percentile
};

// Pairwise histogram -> low-similarity-tail percentile -> angle.
PopulationAngle estimate_population_angle(const EmbeddingSet& e, double percentile = 5.0,
                                          AngleConvention conv = AngleConvention::Half,
                                          std::size_t bin_count = ScoreHistogram::kDefaultBinCount,
                                          unsigned threads = 0);

// Per-row identity and attribute labels, keyed by row index.
class LabelTable {
public:
    struct Record {
        std::optional<std::string> identity;
        std::map<std::string, std::string> attributes;
    };

    // Throws DataError on a duplicate row index.
    void insert(std::size_t row, Record record);

    const Record* find(std::size_t row) const;
    std::size_t size() const noexcept { return records_.size(); }
    const std::map<std::size_t, Record>& records() const noexcept { return records_; }

    // Throws DataError when any row index is >= rows.
    void validate_row_range(std::size_t rows) const;

private:
    std::map<std::size_t, Record> records_;
};

struct IntraClassAngle {
    Angle phi;
    double threshold;  // median of the per-identity percentile thresholds
    std::size_t identities_used;
};

// For each identity with at least two rows, the per_id_percentile nearest-rank
// threshold of its intra-identity pairwise cosines; the median of those
// thresholds across identities (even count: mean of the two middle values)
// converted to an angle. Every row must carry an identity label.
IntraClassAngle estimate_conditional_intra_angle(const EmbeddingSet& e, const LabelTable& labels,
                                                 double per_id_percentile = 5.0,
                                                 AngleConvention conv = AngleConvention::Half);

}  // namespace capest
