#include "capest/demographics.hpp"

#include <map>

#include "capest/errors.hpp"

namespace capest {

SubgroupReport subgroup_capacities(const EmbeddingSet& e, const LabelTable& labels,
                                   const std::string& attribute, Angle phi,
                                   const std::vector<double>& delta_cosines, int n_dim,
                                   const SubgroupOptions& options) {
    labels.validate_row_range(e.rows());

    // std::map keeps categories in name order, which fixes the report order
    // independently of label file order.
    std::map<std::string, std::vector<std::size_t>> by_category;
    for (const auto& [row, record] : labels.records()) {
        const auto it = record.attributes.find(attribute);
        if (it != record.attributes.end()) by_category[it->second].push_back(row);
    }
    if (by_category.empty()) {
        throw DataError("attribute '" + attribute + "' labels no row");
    }

    SubgroupReport report;
    report.attribute = attribute;
    const std::size_t min_size = std::max<std::size_t>(options.min_group_size, 2);
    for (const auto& [category, members] : by_category) {
        if (members.size() < min_size) {
            report.skipped.push_back(
                {category, members.size(),
                 "fewer than " + std::to_string(min_size) + " members"});
            continue;
        }
        const EmbeddingSet group = e.subset(members);
        const PopulationAngle theta =
            estimate_population_angle(group, options.population_percentile,
                                      options.theta_convention, options.bin_count,
                                      options.threads);
        report.groups.push_back({category, members.size(), theta.theta, theta.threshold,
                                 capacity_curve(n_dim, theta.theta, phi, delta_cosines,
                                                options.delta_convention)});
    }
    return report;
}

}  // namespace capest
