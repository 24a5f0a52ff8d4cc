#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "capest/capacity.hpp"
#include "capest/demographics.hpp"
#include "capest/empirical.hpp"

namespace capest::io {

// EMB1 container: 24-byte little-endian header followed by the row-major
// float32 payload.
//   offset 0   magic   "EMB1"
//   offset 4   u32     version, currently 1
//   offset 8   u64     rows
//   offset 16  u32     dim
//   offset 20  u8      dtype, 0 = IEEE float32 little endian
//   offset 21  u8[3]   reserved, zero
inline constexpr char kEmbeddingMagic[4] = {'E', 'M', 'B', '1'};
inline constexpr std::uint32_t kEmbeddingVersion = 1;
inline constexpr std::size_t kEmbeddingHeaderSize = 24;

enum class EmbeddingFormat { Auto, Binary, Csv };

// Reads an EMB1 or CSV embedding file. Auto sniffs the magic bytes. The
// returned set is not normalized; normalization is an explicit step.
// Malformed input throws DataError naming the byte offset or line number.
EmbeddingSet read_embeddings(const std::filesystem::path& path,
                             EmbeddingFormat format = EmbeddingFormat::Auto);

// Writes the EMB1 binary format, narrowing values to float32. A set read
// back from the file reproduces float32-valued data bitwise.
void write_embeddings(const EmbeddingSet& e, const std::filesystem::path& path);

// CSV with a header; required column "row", optional column "identity",
// every other column an attribute.
LabelTable read_labels(const std::filesystem::path& path);

// Plain text scores, one per line; blank lines are skipped.
std::vector<double> read_scores(const std::filesystem::path& path);

struct AngleReport {
    double radians = 0.0;
    std::optional<double> cosine;  // source threshold when one exists
    std::string convention;        // "half" | "full"
    std::string source;            // e.g. "population-percentile", "fixed-cosine"
};

struct EstimateReport {
    int n_dim = 0;
    double population_percentile = 0.0;
    AngleReport theta;
    AngleReport phi;
    std::string delta_convention;
    std::vector<CurvePoint> curve;
};

struct SubgroupReportFile {
    int n_dim = 0;
    double population_percentile = 0.0;
    AngleReport phi;
    std::string theta_convention;
    std::string delta_convention;
    SubgroupReport report;
};

enum class ReportFormat { Json, Csv };

// JSON renderings round-trip through any standard parser; non-finite
// capacities serialize as null, with the degenerate flag carrying the cause.
std::string render_report(const EstimateReport& report, ReportFormat format);
std::string render_report(const SubgroupReportFile& report, ReportFormat format);

void write_report(const EstimateReport& report, const std::filesystem::path& path,
                  ReportFormat format);
void write_report(const SubgroupReportFile& report, const std::filesystem::path& path,
                  ReportFormat format);

}  // namespace capest::io
