#include "capest/empirical.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "capest/errors.hpp"

namespace capest {

namespace {

// Row-block edge for the tiled pairwise sweep; a 512x512 tile of 512-d rows
// keeps both operand blocks cache resident.
constexpr std::size_t kTileRows = 256;

// Eight independent accumulator lanes so the reduction vectorizes without
// reassociation; the summation order is fixed, which keeps scores bitwise
// identical across runs and thread counts.
double dot_product(const double* a, const double* b, std::size_t dim) {
    double acc[8] = {0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0};
    std::size_t k = 0;
    for (; k + 8 <= dim; k += 8) {
        for (int l = 0; l < 8; ++l) acc[l] += a[k + l] * b[k + l];
    }
    double tail = 0.0;
    for (; k < dim; ++k) tail += a[k] * b[k];
    return ((acc[0] + acc[1]) + (acc[2] + acc[3])) +
           ((acc[4] + acc[5]) + (acc[6] + acc[7])) + tail;
}

// Register-blocked variant: one pass of row a against four consecutive b
// rows, so every a load feeds four fused multiply-adds. Lane-wise identical
// to dot_product per row.
void dot_product_x4(const double* a, const double* b, std::size_t dim, double out[4]) {
    double acc0[8] = {}, acc1[8] = {}, acc2[8] = {}, acc3[8] = {};
    std::size_t k = 0;
    for (; k + 8 <= dim; k += 8) {
        for (int l = 0; l < 8; ++l) {
            const double av = a[k + l];
            acc0[l] += av * b[k + l];
            acc1[l] += av * b[dim + k + l];
            acc2[l] += av * b[2 * dim + k + l];
            acc3[l] += av * b[3 * dim + k + l];
        }
    }
    double tail[4] = {};
    for (; k < dim; ++k) {
        const double av = a[k];
        tail[0] += av * b[k];
        tail[1] += av * b[dim + k];
        tail[2] += av * b[2 * dim + k];
        tail[3] += av * b[3 * dim + k];
    }
    const double* accs[4] = {acc0, acc1, acc2, acc3};
    for (int r = 0; r < 4; ++r) {
        const double* acc = accs[r];
        out[r] = ((acc[0] + acc[1]) + (acc[2] + acc[3])) +
                 ((acc[4] + acc[5]) + (acc[6] + acc[7])) + tail[r];
    }
}

// 2 x 4 register tile: four b loads feed eight fused multiply-adds. Per-row
// accumulation order matches dot_product_x4 and dot_product lane for lane.
void dot_product_2x4(const double* a0, const double* a1, const double* b, std::size_t dim,
                     double out0[4], double out1[4]) {
    double acc00[8] = {}, acc01[8] = {}, acc02[8] = {}, acc03[8] = {};
    double acc10[8] = {}, acc11[8] = {}, acc12[8] = {}, acc13[8] = {};
    std::size_t k = 0;
    for (; k + 8 <= dim; k += 8) {
        for (int l = 0; l < 8; ++l) {
            const double a0v = a0[k + l];
            const double a1v = a1[k + l];
            const double b0v = b[k + l];
            const double b1v = b[dim + k + l];
            const double b2v = b[2 * dim + k + l];
            const double b3v = b[3 * dim + k + l];
            acc00[l] += a0v * b0v;
            acc01[l] += a0v * b1v;
            acc02[l] += a0v * b2v;
            acc03[l] += a0v * b3v;
            acc10[l] += a1v * b0v;
            acc11[l] += a1v * b1v;
            acc12[l] += a1v * b2v;
            acc13[l] += a1v * b3v;
        }
    }
    double tail0[4] = {}, tail1[4] = {};
    for (; k < dim; ++k) {
        for (int r = 0; r < 4; ++r) {
            tail0[r] += a0[k] * b[r * dim + k];
            tail1[r] += a1[k] * b[r * dim + k];
        }
    }
    const double* accs0[4] = {acc00, acc01, acc02, acc03};
    const double* accs1[4] = {acc10, acc11, acc12, acc13};
    for (int r = 0; r < 4; ++r) {
        const double* acc = accs0[r];
        out0[r] = ((acc[0] + acc[1]) + (acc[2] + acc[3])) +
                  ((acc[4] + acc[5]) + (acc[6] + acc[7])) + tail0[r];
        acc = accs1[r];
        out1[r] = ((acc[0] + acc[1]) + (acc[2] + acc[3])) +
                  ((acc[4] + acc[5]) + (acc[6] + acc[7])) + tail1[r];
    }
}

void scan_row_range(const EmbeddingSet& e, std::size_t i, std::size_t j0, std::size_t j1,
                    ScoreHistogram& hist) {
    const std::size_t dim = e.dim();
    const double* base = e.data().data();
    const double* row_i = base + i * dim;
    std::size_t j = j0;
    for (; j + 4 <= j1; j += 4) {
        double scores[4];
        dot_product_x4(row_i, base + j * dim, dim, scores);
        hist.add(scores[0]);
        hist.add(scores[1]);
        hist.add(scores[2]);
        hist.add(scores[3]);
    }
    for (; j < j1; ++j) {
        hist.add(dot_product(row_i, base + j * dim, dim));
    }
}

void scan_tile(const EmbeddingSet& e, std::size_t i0, std::size_t i1, std::size_t j0,
               std::size_t j1, ScoreHistogram& hist) {
    const std::size_t dim = e.dim();
    const double* base = e.data().data();
    if (j0 >= i1) {
        // Off-diagonal tile: every (i, j) combination is a pair. The j range
        // is walked in strips small enough to stay L1-resident across the
        // whole i sweep.
        const std::size_t strip = std::max<std::size_t>(1, 32768 / (dim * sizeof(double)));
        for (std::size_t jj = j0; jj < j1; jj += strip) {
            const std::size_t jend = std::min(jj + strip, j1);
            std::size_t i = i0;
            for (; i + 2 <= i1; i += 2) {
                const double* row_a = base + i * dim;
                const double* row_b = row_a + dim;
                std::size_t j = jj;
                for (; j + 4 <= jend; j += 4) {
                    double scores0[4], scores1[4];
                    dot_product_2x4(row_a, row_b, base + j * dim, dim, scores0, scores1);
                    for (int r = 0; r < 4; ++r) hist.add(scores0[r]);
                    for (int r = 0; r < 4; ++r) hist.add(scores1[r]);
                }
                for (; j < jend; ++j) {
                    hist.add(dot_product(row_a, base + j * dim, dim));
                    hist.add(dot_product(row_b, base + j * dim, dim));
                }
            }
            for (; i < i1; ++i) scan_row_range(e, i, jj, jend, hist);
        }
        return;
    }
    // Diagonal tile: honor j > i.
    for (std::size_t i = i0; i < i1; ++i) {
        scan_row_range(e, i, std::max(j0, i + 1), j1, hist);
    }
}

}  // namespace

EmbeddingSet::EmbeddingSet(std::vector<double> data, std::size_t rows, std::size_t dim,
                           bool normalized)
    : data_(std::move(data)), rows_(rows), dim_(dim), normalized_(normalized) {
    if (rows_ < 2) {
        throw DataError("embedding set needs at least 2 rows, got " + std::to_string(rows_));
    }
    if (dim_ < 2) {
        throw DataError("embedding dimension must be at least 2, got " + std::to_string(dim_));
    }
    if (data_.size() != rows_ * dim_) {
        throw DataError("embedding data holds " + std::to_string(data_.size()) +
                        " values, expected " + std::to_string(rows_ * dim_));
    }
    if (normalized_) {
        for (std::size_t i = 0; i < rows_; ++i) {
            double sq = 0.0;
            for (double v : row(i)) sq += v * v;
            if (std::fabs(std::sqrt(sq) - 1.0) > 1e-6) {
                throw DataError("row " + std::to_string(i) +
                                " is not unit norm but the set is marked normalized");
            }
        }
    }
}

EmbeddingSet EmbeddingSet::subset(std::span<const std::size_t> row_indices) const {
    std::vector<double> out;
    out.reserve(row_indices.size() * dim_);
    for (std::size_t i : row_indices) {
        if (i >= rows_) {
            throw DataError("subset row index " + std::to_string(i) + " out of range");
        }
        const auto r = row(i);
        out.insert(out.end(), r.begin(), r.end());
    }
    return EmbeddingSet(std::move(out), row_indices.size(), dim_, normalized_);
}

EmbeddingSet normalize_rows(EmbeddingSet e) {
    for (std::size_t i = 0; i < e.rows_; ++i) {
        double* row = e.data_.data() + i * e.dim_;
        double sq = 0.0;
        for (std::size_t k = 0; k < e.dim_; ++k) sq += row[k] * row[k];
        const double norm = std::sqrt(sq);
        if (!(norm > 1e-12)) {
            throw DataError("cannot normalize row " + std::to_string(i) +
                            ": norm is " + std::to_string(norm));
        }
        for (std::size_t k = 0; k < e.dim_; ++k) row[k] /= norm;
    }
    e.normalized_ = true;
    return e;
}

ScoreHistogram::ScoreHistogram(std::size_t bin_count) {
    if (bin_count == 0) throw DomainError("histogram needs at least one bin");
    counts_.assign(bin_count, 0);
    width_ = (kHi - kLo) / static_cast<double>(bin_count);
}

std::size_t ScoreHistogram::bin_index(double score) const {
    const double pos = (score - kLo) / width_;
    if (!(pos > 0.0)) return 0;
    const auto i = static_cast<std::size_t>(pos);
    return i >= counts_.size() ? counts_.size() - 1 : i;
}

double ScoreHistogram::bin_upper_edge(std::size_t i) const {
    if (i + 1 >= counts_.size()) return kHi;  // exact upper boundary
    return std::min(kLo + static_cast<double>(i + 1) * width_, kHi);
}

void ScoreHistogram::add(double score) {
    ++counts_[bin_index(score)];
    ++total_;
}

void ScoreHistogram::merge(const ScoreHistogram& other) {
    if (other.bin_count() != bin_count()) {
        throw DomainError("cannot merge histograms with different bin counts");
    }
    for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
    total_ += other.total_;
}

ScoreHistogram pairwise_score_histogram(const EmbeddingSet& e, std::size_t bin_count,
                                        unsigned threads) {
    if (!e.normalized()) {
        throw DataError("pairwise scores require a normalized embedding set");
    }
    const std::size_t n = e.rows();

    struct Tile {
        std::size_t i0, j0;
    };
    std::vector<Tile> tiles;
    for (std::size_t i0 = 0; i0 < n; i0 += kTileRows) {
        for (std::size_t j0 = i0; j0 < n; j0 += kTileRows) tiles.push_back({i0, j0});
    }

    std::size_t worker_count = threads ? threads : std::thread::hardware_concurrency();
    if (worker_count == 0) worker_count = 1;
    worker_count = std::min(worker_count, tiles.size());

    std::vector<ScoreHistogram> partials(worker_count, ScoreHistogram(bin_count));
    std::atomic<std::size_t> next_tile{0};

    auto work = [&](std::size_t w) {
        ScoreHistogram& hist = partials[w];
        for (;;) {
            const std::size_t t = next_tile.fetch_add(1, std::memory_order_relaxed);
            if (t >= tiles.size()) break;
            const Tile tile = tiles[t];
            scan_tile(e, tile.i0, std::min(tile.i0 + kTileRows, n), tile.j0,
                      std::min(tile.j0 + kTileRows, n), hist);
        }
    };

    std::vector<std::thread> pool;
    pool.reserve(worker_count - 1);
    for (std::size_t w = 1; w < worker_count; ++w) pool.emplace_back(work, w);
    work(0);
    for (auto& th : pool) th.join();

    ScoreHistogram result(bin_count);
    for (const auto& partial : partials) result.merge(partial);
    return result;
}

double percentile_threshold(const ScoreHistogram& h, double p) {
    if (h.total() == 0) throw DataError("percentile of an empty histogram");
    if (!(p > 0.0 && p <= 100.0)) {
        throw DomainError("percentile must lie in (0, 100], got " + std::to_string(p));
    }
    auto rank = static_cast<std::uint64_t>(
        std::ceil(p * static_cast<double>(h.total()) / 100.0));
    rank = std::clamp<std::uint64_t>(rank, 1, h.total());

    std::uint64_t cumulative = 0;
    for (std::size_t i = 0; i < h.bin_count(); ++i) {
        cumulative += h.counts()[i];
        if (cumulative >= rank) return h.bin_upper_edge(i);
    }
    return h.bin_upper_edge(h.bin_count() - 1);
}

double far_threshold(const ScoreHistogram& h, double far) {
    if (h.total() == 0) throw DataError("FAR threshold of an empty histogram");
    if (!(far > 0.0 && far < 1.0)) {
        throw DomainError("FAR must lie in (0, 1), got " + std::to_string(far));
    }
    const double allowed = far * static_cast<double>(h.total());
    std::uint64_t cumulative = 0;
    for (std::size_t i = 0; i < h.bin_count(); ++i) {
        cumulative += h.counts()[i];
        if (static_cast<double>(h.total() - cumulative) <= allowed) {
            return h.bin_upper_edge(i);
        }
    }
    return h.bin_upper_edge(h.bin_count() - 1);
}

PopulationAngle estimate_population_angle(const EmbeddingSet& e, double percentile,
                                          AngleConvention conv, std::size_t bin_count,
                                          unsigned threads) {
    const ScoreHistogram hist = pairwise_score_histogram(e, bin_count, threads);
    const double threshold = percentile_threshold(hist, percentile);
    return PopulationAngle{angle_from_cosine(threshold, conv), threshold};
}

void LabelTable::insert(std::size_t row, Record record) {
    const auto [it, inserted] = records_.emplace(row, std::move(record));
    if (!inserted) {
        throw DataError("duplicate label for row " + std::to_string(row));
    }
}

const LabelTable::Record* LabelTable::find(std::size_t row) const {
    const auto it = records_.find(row);
    return it == records_.end() ? nullptr : &it->second;
}

void LabelTable::validate_row_range(std::size_t rows) const {
    if (!records_.empty() && records_.rbegin()->first >= rows) {
        throw DataError("label row index " + std::to_string(records_.rbegin()->first) +
                        " out of range for " + std::to_string(rows) + " embedding rows");
    }
}

IntraClassAngle estimate_conditional_intra_angle(const EmbeddingSet& e, const LabelTable& labels,
                                                 double per_id_percentile,
                                                 AngleConvention conv) {
    if (!e.normalized()) {
        throw DataError("intra-class scores require a normalized embedding set");
    }
    if (!(per_id_percentile > 0.0 && per_id_percentile <= 100.0)) {
        throw DomainError("percentile must lie in (0, 100]");
    }
    labels.validate_row_range(e.rows());

    std::map<std::string, std::vector<std::size_t>> by_identity;
    for (std::size_t i = 0; i < e.rows(); ++i) {
        const LabelTable::Record* record = labels.find(i);
        if (record == nullptr || !record->identity.has_value()) {
            throw DataError("row " + std::to_string(i) + " has no identity label");
        }
        by_identity[*record->identity].push_back(i);
    }

    std::vector<double> per_id_thresholds;
    for (const auto& [identity, members] : by_identity) {
        if (members.size() < 2) continue;
        std::vector<double> scores;
        scores.reserve(members.size() * (members.size() - 1) / 2);
        for (std::size_t a = 0; a < members.size(); ++a) {
            for (std::size_t b = a + 1; b < members.size(); ++b) {
                scores.push_back(dot_product(e.row(members[a]).data(),
                                             e.row(members[b]).data(), e.dim()));
            }
        }
        std::sort(scores.begin(), scores.end());
        auto rank = static_cast<std::size_t>(
            std::ceil(per_id_percentile * static_cast<double>(scores.size()) / 100.0));
        rank = std::clamp<std::size_t>(rank, 1, scores.size());
        per_id_thresholds.push_back(scores[rank - 1]);
    }
    if (per_id_thresholds.empty()) {
        throw DataError("no identity has at least two rows");
    }

    std::sort(per_id_thresholds.begin(), per_id_thresholds.end());
    const std::size_t m = per_id_thresholds.size();
    const double median = (m % 2 == 1)
                              ? per_id_thresholds[m / 2]
                              : 0.5 * (per_id_thresholds[m / 2 - 1] + per_id_thresholds[m / 2]);

    return IntraClassAngle{angle_from_cosine(median, conv), median, m};
}

}  // namespace capest
