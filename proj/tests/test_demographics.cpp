#include "capest/demographics.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "doctest.h"

#include "capest/errors.hpp"
#include "capest/oracle.hpp"

using namespace capest;

namespace {

LabelTable label_all(std::size_t rows, const std::string& attribute,
                     const std::vector<std::string>& categories) {
    LabelTable labels;
    for (std::size_t i = 0; i < rows; ++i) {
        labels.insert(i, {std::nullopt, {{attribute, categories[i % categories.size()]}}});
    }
    return labels;
}

const std::vector<double> kDeltas = {0.2, 0.5, 0.8};

}  // namespace

TEST_CASE("single category reproduces the full-dataset estimate") {
    const EmbeddingSet e = sample_uniform_sphere({8, 11, 80});
    const LabelTable labels = label_all(e.rows(), "gender", {"all"});

    SubgroupOptions options;
    options.min_group_size = 2;
    const SubgroupReport report =
        subgroup_capacities(e, labels, "gender", Angle(0.4), kDeltas, 8, options);

    REQUIRE(report.groups.size() == 1);
    const PopulationAngle full = estimate_population_angle(e, 5.0);
    CHECK(report.groups[0].member_count == e.rows());
    CHECK(report.groups[0].threshold == full.threshold);
    CHECK(report.groups[0].theta.radians() == full.theta.radians());

    const auto direct = capacity_curve(8, full.theta, Angle(0.4), kDeltas,
                                       options.delta_convention);
    REQUIRE(report.groups[0].curve.size() == direct.size());
    for (std::size_t i = 0; i < direct.size(); ++i) {
        CHECK(report.groups[0].curve[i].estimate.capacity == direct[i].estimate.capacity);
    }
}

TEST_CASE("mirror-image categories get identical capacities") {
    const EmbeddingSet half = sample_uniform_sphere({8, 21, 60});
    // Category b holds the same rows with one coordinate negated: every
    // within-category pairwise score is bitwise identical to category a's.
    std::vector<double> data(half.data());
    for (std::size_t i = 0; i < half.rows(); ++i) {
        for (std::size_t k = 0; k < half.dim(); ++k) {
            const double v = half.row(i)[k];
            data.push_back(k == 0 ? -v : v);
        }
    }
    const EmbeddingSet e(std::move(data), 2 * half.rows(), half.dim(), true);

    LabelTable labels;
    for (std::size_t i = 0; i < half.rows(); ++i) {
        labels.insert(i, {std::nullopt, {{"side", "a"}}});
    }
    for (std::size_t i = half.rows(); i < e.rows(); ++i) {
        labels.insert(i, {std::nullopt, {{"side", "b"}}});
    }

    SubgroupOptions options;
    options.min_group_size = 2;
    const SubgroupReport report =
        subgroup_capacities(e, labels, "side", Angle(0.3), kDeltas, 8, options);
    REQUIRE(report.groups.size() == 2);
    CHECK(report.groups[0].threshold == report.groups[1].threshold);
    for (std::size_t i = 0; i < kDeltas.size(); ++i) {
        CHECK(report.groups[0].curve[i].estimate.capacity ==
              report.groups[1].curve[i].estimate.capacity);
    }
}

TEST_CASE("small categories are skipped with a reason") {
    const EmbeddingSet e = sample_uniform_sphere({8, 31, 61});
    LabelTable labels;
    for (std::size_t i = 0; i < 60; ++i) {
        labels.insert(i, {std::nullopt, {{"age", "20-40"}}});
    }
    labels.insert(60, {std::nullopt, {{"age", "0-20"}}});

    SubgroupOptions options;
    options.min_group_size = 50;
    const SubgroupReport report =
        subgroup_capacities(e, labels, "age", Angle(0.3), kDeltas, 8, options);
    REQUIRE(report.groups.size() == 1);
    CHECK(report.groups[0].category == "20-40");
    REQUIRE(report.skipped.size() == 1);
    CHECK(report.skipped[0].category == "0-20");
    CHECK(report.skipped[0].member_count == 1);
    CHECK(report.skipped[0].reason.find("fewer than") != std::string::npos);

    // Member counts across groups and skipped cover every labeled row.
    std::size_t covered = 0;
    for (const auto& g : report.groups) covered += g.member_count;
    for (const auto& s : report.skipped) covered += s.member_count;
    CHECK(covered == labels.size());
}

TEST_CASE("removing one category leaves the others unchanged") {
    const EmbeddingSet e = sample_uniform_sphere({8, 41, 90});
    const LabelTable both = label_all(e.rows(), "grp", {"x", "y"});
    LabelTable only_y;
    for (const auto& [row, record] : both.records()) {
        if (record.attributes.at("grp") == "y") only_y.insert(row, record);
    }

    SubgroupOptions options;
    options.min_group_size = 2;
    const SubgroupReport with_x =
        subgroup_capacities(e, both, "grp", Angle(0.3), kDeltas, 8, options);
    const SubgroupReport without_x =
        subgroup_capacities(e, only_y, "grp", Angle(0.3), kDeltas, 8, options);

    const auto find_y = [](const SubgroupReport& r) {
        return std::find_if(r.groups.begin(), r.groups.end(),
                            [](const SubgroupResult& g) { return g.category == "y"; });
    };
    const auto a = find_y(with_x);
    const auto b = find_y(without_x);
    REQUIRE(a != with_x.groups.end());
    REQUIRE(b != without_x.groups.end());
    CHECK(a->threshold == b->threshold);
    for (std::size_t i = 0; i < kDeltas.size(); ++i) {
        CHECK(a->curve[i].estimate.capacity == b->curve[i].estimate.capacity);
    }
}

TEST_CASE("groups are reported in category-name order") {
    const EmbeddingSet e = sample_uniform_sphere({8, 51, 90});
    LabelTable labels;
    const std::string names[] = {"zebra", "apple", "mango"};
    for (std::size_t i = 0; i < e.rows(); ++i) {
        labels.insert(i, {std::nullopt, {{"fruit", names[i % 3]}}});
    }
    SubgroupOptions options;
    options.min_group_size = 2;
    const SubgroupReport report =
        subgroup_capacities(e, labels, "fruit", Angle(0.3), kDeltas, 8, options);
    REQUIRE(report.groups.size() == 3);
    CHECK(report.groups[0].category == "apple");
    CHECK(report.groups[1].category == "mango");
    CHECK(report.groups[2].category == "zebra");
}

TEST_CASE("group thresholds never fall below the population minimum") {
    const EmbeddingSet e = sample_uniform_sphere({8, 61, 240});
    const LabelTable labels = label_all(e.rows(), "grp", {"a", "b", "c"});

    const ScoreHistogram population = pairwise_score_histogram(e);
    std::size_t lowest = 0;
    while (population.counts()[lowest] == 0) ++lowest;
    const double population_min_edge = population.bin_upper_edge(lowest);

    SubgroupOptions options;
    options.min_group_size = 2;
    const SubgroupReport report =
        subgroup_capacities(e, labels, "grp", Angle(0.3), kDeltas, 8, options);
    REQUIRE(report.groups.size() == 3);
    for (const auto& group : report.groups) {
        // A subgroup's scores are a sub-multiset of the population's, so its
        // low tail cannot extend below the population minimum.
        CHECK(group.threshold >= population_min_edge - population.bin_width());
    }
}

TEST_CASE("absent attribute is an error") {
    const EmbeddingSet e = sample_uniform_sphere({8, 71, 30});
    const LabelTable labels = label_all(e.rows(), "gender", {"M", "F"});
    CHECK_THROWS_AS(
        subgroup_capacities(e, labels, "none", Angle(0.3), kDeltas, 8, SubgroupOptions{}),
        DataError);
}
