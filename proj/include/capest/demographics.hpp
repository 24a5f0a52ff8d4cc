#pragma once

#include <string>
#include <vector>

#include "capest/capacity.hpp"
#include "capest/empirical.hpp"

namespace capest {

struct SubgroupOptions {
    double population_percentile = 5.0;
    std::size_t min_group_size = 50;
    AngleConvention theta_convention = AngleConvention::Half;
    AngleConvention delta_convention = AngleConvention::Full;
    std::size_t bin_count = ScoreHistogram::kDefaultBinCount;
    unsigned threads = 0;
};

struct SubgroupResult {
    std::string category;
    std::size_t member_count = 0;
    Angle theta;
    double threshold = 0.0;  // per-group population percentile threshold
    std::vector<CurvePoint> curve;
};

struct SubgroupSkip {
    std::string category;
    std::size_t member_count = 0;
    std::string reason;
};

struct SubgroupReport {
    std::string attribute;
    std::vector<SubgroupResult> groups;   // in category-name order
    std::vector<SubgroupSkip> skipped;    // in category-name order
};

// For each category of the attribute: restrict rows to the category,
// re-estimate the population angle on the restriction, and evaluate the
// capacity curve with the shared phi. Categories smaller than min_group_size
// are reported as skipped. Throws DataError when the attribute labels no row.
SubgroupReport subgroup_capacities(const EmbeddingSet& e, const LabelTable& labels,
                                   const std::string& attribute, Angle phi,
                                   const std::vector<double>& delta_cosines, int n_dim,
                                   const SubgroupOptions& options = {});

}  // namespace capest
