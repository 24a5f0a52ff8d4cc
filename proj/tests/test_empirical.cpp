#include "capest/empirical.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "doctest.h"

#include "capest/errors.hpp"
#include "capest/oracle.hpp"

using namespace capest;

namespace {

EmbeddingSet from_polar_degrees(const std::vector<double>& degrees) {
    std::vector<double> data;
    for (double deg : degrees) {
        const double rad = deg * std::numbers::pi / 180.0;
        data.push_back(std::cos(rad));
        data.push_back(std::sin(rad));
    }
    return EmbeddingSet(std::move(data), degrees.size(), 2, true);
}

double exact_nearest_rank(std::vector<double> values, double p) {
    std::sort(values.begin(), values.end());
    auto rank = static_cast<std::size_t>(
        std::ceil(p * static_cast<double>(values.size()) / 100.0));
    rank = std::clamp<std::size_t>(rank, 1, values.size());
    return values[rank - 1];
}

std::vector<double> all_pairwise_scores(const EmbeddingSet& e) {
    std::vector<double> scores;
    for (std::size_t i = 0; i < e.rows(); ++i) {
        for (std::size_t j = i + 1; j < e.rows(); ++j) {
            double dot = 0.0;
            for (std::size_t k = 0; k < e.dim(); ++k) dot += e.row(i)[k] * e.row(j)[k];
            scores.push_back(dot);
        }
    }
    return scores;
}

}  // namespace

TEST_CASE("EmbeddingSet construction guards") {
    CHECK_THROWS_AS(EmbeddingSet({1.0, 0.0}, 1, 2, false), DataError);
    CHECK_THROWS_AS(EmbeddingSet({1.0, 2.0, 3.0}, 3, 1, false), DataError);
    CHECK_THROWS_AS(EmbeddingSet({1.0, 2.0, 3.0}, 2, 2, false), DataError);
    // Marked normalized but is not.
    CHECK_THROWS_AS(EmbeddingSet({2.0, 0.0, 0.0, 1.0}, 2, 2, true), DataError);
}

TEST_CASE("normalize_rows scales, is idempotent, and names zero rows") {
    EmbeddingSet e = normalize_rows(EmbeddingSet({3.0, 4.0, 0.0, 2.0}, 2, 2, false));
    CHECK(e.normalized());
    CHECK(e.row(0)[0] == 0.6);
    CHECK(e.row(0)[1] == 0.8);
    CHECK(e.row(1)[1] == 1.0);

    EmbeddingSet again = normalize_rows(e);
    for (std::size_t k = 0; k < 2; ++k) {
        CHECK(std::fabs(again.row(0)[k] - e.row(0)[k]) <= 1e-12);
    }

    try {
        normalize_rows(EmbeddingSet({1.0, 0.0, 0.0, 0.0}, 2, 2, false));
        FAIL("expected DataError");
    } catch (const DataError& err) {
        CHECK(std::string(err.what()).find("row 1") != std::string::npos);
    }
}

TEST_CASE("histogram binning edges") {
    ScoreHistogram h(ScoreHistogram::kDefaultBinCount);
    CHECK(h.bin_index(-1.0) == 0);
    CHECK(h.bin_index(1.0) == h.bin_count() - 1);
    CHECK(h.bin_index(-1.0 - 1e-15) == 0);
    CHECK(h.bin_index(1.0 + 1e-15) == h.bin_count() - 1);
    CHECK(h.bin_upper_edge(h.bin_count() - 1) == 1.0);
    h.add(0.5);
    CHECK(h.total() == 1);
    const std::size_t bin = h.bin_index(0.5);
    CHECK(h.bin_upper_edge(bin) > 0.5);
    CHECK(h.bin_upper_edge(bin) - h.bin_width() <= 0.5);
}

TEST_CASE("pairwise histogram of three 2D directions") {
    const EmbeddingSet e = from_polar_degrees({0.0, 60.0, 90.0});
    const ScoreHistogram h = pairwise_score_histogram(e);
    CHECK(h.total() == 3);
    const double expected[] = {0.5, std::sqrt(3.0) / 2.0, 0.0};
    for (double s : expected) {
        CHECK(h.counts()[h.bin_index(s)] == 1);
    }
}

TEST_CASE("pairwise histogram of identical and orthogonal rows") {
    {
        std::vector<double> data;
        for (int i = 0; i < 5; ++i) {
            data.push_back(1.0);
            data.push_back(0.0);
        }
        const EmbeddingSet e(std::move(data), 5, 2, true);
        const ScoreHistogram h = pairwise_score_histogram(e);
        CHECK(h.total() == 10);
        CHECK(h.counts()[h.bin_index(1.0)] == 10);
    }
    {
        const EmbeddingSet e({1.0, 0.0, 0.0, 1.0}, 2, 2, true);
        const ScoreHistogram h = pairwise_score_histogram(e);
        CHECK(h.total() == 1);
        CHECK(h.counts()[h.bin_index(0.0)] == 1);
    }
}

TEST_CASE("pairwise histogram rejects unnormalized input") {
    const EmbeddingSet e({3.0, 4.0, 1.0, 0.0}, 2, 2, false);
    CHECK_THROWS_AS(pairwise_score_histogram(e), DataError);
}

TEST_CASE("pairwise histogram totals and thread invariance") {
    const EmbeddingSet e = sample_uniform_sphere({16, 123, 700});
    const ScoreHistogram h1 = pairwise_score_histogram(e, 4096, 1);
    CHECK(h1.total() == 700ull * 699ull / 2ull);

    for (unsigned threads : {2u, 4u, 8u}) {
        const ScoreHistogram ht = pairwise_score_histogram(e, 4096, threads);
        REQUIRE(ht.total() == h1.total());
        for (std::size_t b = 0; b < h1.bin_count(); ++b) {
            REQUIRE(ht.counts()[b] == h1.counts()[b]);
        }
    }
}

TEST_CASE("pairwise histogram is invariant to row permutation") {
    // More rows than one tile, so permutation moves pairs between the
    // diagonal-tile, off-diagonal, and remainder kernel paths.
    const EmbeddingSet e = sample_uniform_sphere({8, 5, 600});
    std::vector<std::size_t> order(e.rows());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::mt19937_64 rng(1);
    std::shuffle(order.begin(), order.end(), rng);
    const EmbeddingSet shuffled = e.subset(order);

    const ScoreHistogram h1 = pairwise_score_histogram(e);
    const ScoreHistogram h2 = pairwise_score_histogram(shuffled);
    REQUIRE(h1.total() == h2.total());
    for (std::size_t b = 0; b < h1.bin_count(); ++b) {
        REQUIRE(h1.counts()[b] == h2.counts()[b]);
    }
}

TEST_CASE("percentile threshold nearest-rank behaviour") {
    {
        const EmbeddingSet e = from_polar_degrees({0.0, 60.0, 90.0});
        const ScoreHistogram h = pairwise_score_histogram(e);
        // Rank ceil(0.05 * 3) = 1: the lowest score, 0.0.
        const double t = percentile_threshold(h, 5.0);
        CHECK(t == h.bin_upper_edge(h.bin_index(0.0)));
        // p = 100: the highest occupied bin.
        CHECK(percentile_threshold(h, 100.0) ==
              h.bin_upper_edge(h.bin_index(std::sqrt(3.0) / 2.0)));
    }
    {
        ScoreHistogram h;
        h.add(0.25);
        for (double p : {1.0, 37.5, 99.0, 100.0}) {
            const double t = percentile_threshold(h, p);
            CHECK(t > 0.25);
            CHECK(t - h.bin_width() <= 0.25);
        }
    }
    CHECK_THROWS_AS(percentile_threshold(ScoreHistogram(), 5.0), DataError);
    ScoreHistogram h;
    h.add(0.0);
    CHECK_THROWS_AS(percentile_threshold(h, 0.0), DomainError);
    CHECK_THROWS_AS(percentile_threshold(h, 101.0), DomainError);
}

TEST_CASE("histogram percentile tracks the exact sorted percentile") {
    const EmbeddingSet e = sample_uniform_sphere({8, 99, 400});
    const ScoreHistogram h = pairwise_score_histogram(e);
    const std::vector<double> scores = all_pairwise_scores(e);
    REQUIRE(scores.size() == h.total());
    for (double p : {1.0, 5.0, 25.0, 50.0, 75.0, 95.0, 100.0}) {
        const double exact = exact_nearest_rank(scores, p);
        const double approx = percentile_threshold(h, p);
        CHECK(std::fabs(approx - exact) <= h.bin_width());
    }
}

TEST_CASE("far threshold order statistics") {
    ScoreHistogram h;
    // 1000 scores in distinct ascending bins.
    std::vector<std::size_t> bins;
    for (int i = 0; i < 1000; ++i) {
        const std::size_t bin = 5000 + 3 * static_cast<std::size_t>(i);
        bins.push_back(bin);
        h.add(ScoreHistogram::kLo + (static_cast<double>(bin) + 0.5) * h.bin_width());
    }
    CHECK(h.total() == 1000);
    // far = 0.1 keeps 100 scores above the threshold: the 900th score's bin.
    CHECK(far_threshold(h, 0.1) == h.bin_upper_edge(bins[899]));
    // far close to 1 admits nearly everything: the lowest occupied bin.
    CHECK(far_threshold(h, 0.999) == h.bin_upper_edge(bins[0]));

    CHECK_THROWS_AS(far_threshold(ScoreHistogram(), 0.1), DataError);
    CHECK_THROWS_AS(far_threshold(h, 0.0), DomainError);
    CHECK_THROWS_AS(far_threshold(h, 1.0), DomainError);
}

TEST_CASE("population angle estimation") {
    {
        const EmbeddingSet e = from_polar_degrees({0.0, 60.0, 90.0});
        const PopulationAngle pop = estimate_population_angle(e, 5.0);
        CHECK(std::fabs(pop.threshold) <= 2e-4);
        CHECK(std::fabs(pop.theta.radians() - std::numbers::pi / 4.0) <= 2e-4);
    }
    {
        std::vector<double> data;
        for (int i = 0; i < 4; ++i) {
            data.push_back(0.6);
            data.push_back(0.8);
        }
        const EmbeddingSet e(std::move(data), 4, 2, true);
        const PopulationAngle pop = estimate_population_angle(e, 5.0);
        CHECK(pop.threshold == 1.0);
        CHECK(pop.theta.radians() == 0.0);
    }
    {
        const EmbeddingSet e({1.0, 0.0, -1.0, 0.0}, 2, 2, true);
        const PopulationAngle pop = estimate_population_angle(e, 5.0);
        CHECK(pop.threshold == doctest::Approx(-1.0).epsilon(1e-3));
        CHECK(std::fabs(pop.theta.radians() - std::numbers::pi / 2.0) <= 0.01);
    }
}

TEST_CASE("population angle is permutation invariant") {
    const EmbeddingSet e = sample_uniform_sphere({8, 77, 200});
    std::vector<std::size_t> order(e.rows());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::mt19937_64 rng(3);
    std::shuffle(order.begin(), order.end(), rng);

    const PopulationAngle a = estimate_population_angle(e, 5.0);
    const PopulationAngle b = estimate_population_angle(e.subset(order), 5.0);
    CHECK(a.threshold == b.threshold);
    CHECK(a.theta.radians() == b.theta.radians());
}

TEST_CASE("population threshold is robust to near-duplicate rows") {
    const std::size_t n = 2048;
    const EmbeddingSet base = sample_uniform_sphere({16, 2024, n});
    const ScoreHistogram h = pairwise_score_histogram(base);
    const double s_before = percentile_threshold(h, 5.0);

    // Append near-duplicates (cosine >= 0.9999) of the first three rows.
    std::mt19937_64 rng(55);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::vector<double> data(base.data());
    for (std::size_t dup = 0; dup < 3; ++dup) {
        std::vector<double> row(base.row(dup).begin(), base.row(dup).end());
        double sq = 0.0;
        for (double& v : row) {
            v += 1e-4 * noise(rng);
            sq += v * v;
        }
        for (double& v : row) data.push_back(v / std::sqrt(sq));
    }
    const EmbeddingSet extended(std::move(data), n + 3, 16, true);
    {
        double worst = 1.0;
        for (std::size_t dup = 0; dup < 3; ++dup) {
            double dot = 0.0;
            for (std::size_t k = 0; k < 16; ++k) {
                dot += extended.row(dup)[k] * extended.row(n + dup)[k];
            }
            worst = std::min(worst, dot);
        }
        REQUIRE(worst >= 0.9999);
    }

    const double s_after = percentile_threshold(pairwise_score_histogram(extended), 5.0);
    CHECK(std::fabs(s_after - s_before) <= h.bin_width() * 1.0000001);
}

TEST_CASE("label table guards") {
    LabelTable table;
    table.insert(0, {"a", {{"gender", "M"}}});
    table.insert(1, {"a", {}});
    CHECK_THROWS_AS(table.insert(1, {"b", {}}), DataError);
    CHECK(table.find(0)->identity == "a");
    CHECK(table.find(2) == nullptr);
    CHECK_THROWS_AS(table.validate_row_range(1), DataError);
    CHECK_NOTHROW(table.validate_row_range(2));
}

TEST_CASE("conditional intra-class angle from per-identity thresholds") {
    // Identity a: cosine exactly 0.8; identity b: cosine exactly 0.7.
    const std::vector<double> data = {
        1.0, 0.0,                  // a
        0.8, 0.6,                  // a
        0.0, 1.0,                  // b
        std::sqrt(0.51), 0.7,      // b
    };
    const EmbeddingSet e(data, 4, 2, true);
    LabelTable labels;
    labels.insert(0, {"a", {}});
    labels.insert(1, {"a", {}});
    labels.insert(2, {"b", {}});
    labels.insert(3, {"b", {}});

    const IntraClassAngle intra = estimate_conditional_intra_angle(e, labels, 5.0);
    CHECK(intra.identities_used == 2);
    CHECK(intra.threshold == 0.75);
    CHECK(intra.phi.radians() == doctest::Approx(std::acos(0.75) / 2.0).epsilon(1e-14));

    // Bijective renaming leaves the estimate unchanged.
    LabelTable renamed;
    renamed.insert(0, {"zz", {}});
    renamed.insert(1, {"zz", {}});
    renamed.insert(2, {"q", {}});
    renamed.insert(3, {"q", {}});
    const IntraClassAngle same = estimate_conditional_intra_angle(e, renamed, 5.0);
    CHECK(same.threshold == intra.threshold);
    CHECK(same.phi.radians() == intra.phi.radians());
}

TEST_CASE("conditional intra-class angle degenerate identity") {
    std::vector<double> data;
    for (int i = 0; i < 3; ++i) {
        data.push_back(1.0);
        data.push_back(0.0);
    }
    const EmbeddingSet e(std::move(data), 3, 2, true);
    LabelTable labels;
    for (std::size_t i = 0; i < 3; ++i) labels.insert(i, {"only", {}});
    const IntraClassAngle intra = estimate_conditional_intra_angle(e, labels, 5.0);
    CHECK(intra.threshold == 1.0);
    CHECK(intra.phi.radians() == 0.0);
}

TEST_CASE("conditional intra-class angle error paths") {
    const EmbeddingSet e({1.0, 0.0, 0.0, 1.0}, 2, 2, true);
    {
        LabelTable labels;
        labels.insert(0, {"a", {}});
        labels.insert(1, {"b", {}});
        CHECK_THROWS_AS(estimate_conditional_intra_angle(e, labels, 5.0), DataError);
    }
    {
        LabelTable labels;
        labels.insert(0, {"a", {}});
        CHECK_THROWS_AS(estimate_conditional_intra_angle(e, labels, 5.0), DataError);
    }
    {
        LabelTable labels;
        labels.insert(0, {std::nullopt, {{"gender", "F"}}});
        labels.insert(1, {"a", {}});
        CHECK_THROWS_AS(estimate_conditional_intra_angle(e, labels, 5.0), DataError);
    }
}

TEST_CASE("conditional intra-class angle median with even identity count") {
    // Four identities with pair cosines 0.9, 0.8, 0.6, 0.5: median (0.8 + 0.6)/2.
    std::vector<double> data;
    LabelTable labels;
    const double cosines[] = {0.9, 0.8, 0.6, 0.5};
    for (std::size_t id = 0; id < 4; ++id) {
        data.push_back(1.0);
        data.push_back(0.0);
        data.push_back(cosines[id]);
        data.push_back(std::sqrt(1.0 - cosines[id] * cosines[id]));
        const std::string name(1, static_cast<char>('a' + id));
        labels.insert(2 * id, {name, {}});
        labels.insert(2 * id + 1, {name, {}});
    }
    const EmbeddingSet e(std::move(data), 8, 2, true);
    const IntraClassAngle intra = estimate_conditional_intra_angle(e, labels, 5.0);
    CHECK(intra.identities_used == 4);
    CHECK(intra.threshold == doctest::Approx(0.7).epsilon(1e-15));
}
