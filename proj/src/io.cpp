#include "capest/io.hpp"

#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <string_view>

#include "json.hpp"

#include "capest/errors.hpp"
#include "capest/version.hpp"

namespace capest::io {

namespace {

using nlohmann::json;

std::uint32_t read_u32_le(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
           static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

std::uint64_t read_u64_le(const unsigned char* p) {
    return static_cast<std::uint64_t>(read_u32_le(p)) |
           static_cast<std::uint64_t>(read_u32_le(p + 4)) << 32;
}

void put_u32_le(std::uint32_t v, unsigned char* p) {
    p[0] = static_cast<unsigned char>(v);
    p[1] = static_cast<unsigned char>(v >> 8);
    p[2] = static_cast<unsigned char>(v >> 16);
    p[3] = static_cast<unsigned char>(v >> 24);
}

void put_u64_le(std::uint64_t v, unsigned char* p) {
    put_u32_le(static_cast<std::uint32_t>(v), p);
    put_u32_le(static_cast<std::uint32_t>(v >> 32), p + 4);
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    for (;;) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            fields.push_back(trim(line.substr(start)));
            return fields;
        }
        fields.push_back(trim(line.substr(start, comma - start)));
        start = comma + 1;
    }
}

bool parse_double(std::string_view field, double& out) {
    const char* begin = field.data();
    const char* end = begin + field.size();
    const auto [ptr, ec] = std::from_chars(begin, end, out);
    return ec == std::errc{} && ptr == end && !field.empty();
}

EmbeddingSet read_embeddings_binary(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path.string() + "'");

    const auto file_size = static_cast<std::uint64_t>(std::filesystem::file_size(path));
    if (file_size < kEmbeddingHeaderSize) {
        throw DataError("'" + path.string() + "': file of " + std::to_string(file_size) +
                        " bytes is smaller than the " +
                        std::to_string(kEmbeddingHeaderSize) + "-byte header");
    }

    unsigned char header[kEmbeddingHeaderSize];
    in.read(reinterpret_cast<char*>(header), sizeof header);
    if (!in) throw DataError("'" + path.string() + "': failed to read header");

    if (std::memcmp(header, kEmbeddingMagic, 4) != 0) {
        throw DataError("'" + path.string() + "': bad magic at offset 0");
    }
    const std::uint32_t version = read_u32_le(header + 4);
    if (version != kEmbeddingVersion) {
        throw DataError("'" + path.string() + "': unsupported version " +
                        std::to_string(version) + " at offset 4");
    }
    const std::uint64_t rows = read_u64_le(header + 8);
    const std::uint32_t dim = read_u32_le(header + 16);
    const unsigned dtype = header[20];
    if (dtype != 0) {
        throw DataError("'" + path.string() + "': unsupported dtype " +
                        std::to_string(dtype) + " at offset 20");
    }
    if (header[21] != 0 || header[22] != 0 || header[23] != 0) {
        throw DataError("'" + path.string() + "': reserved bytes at offset 21 are not zero");
    }

    // Validate the promised payload against the real file size before any
    // allocation sized from the header.
    const std::uint64_t actual_payload = file_size - kEmbeddingHeaderSize;
    if (dim != 0 && rows > actual_payload / (4ull * dim)) {
        throw DataError("'" + path.string() + "': payload truncated at offset " +
                        std::to_string(kEmbeddingHeaderSize) + ": header promises " +
                        std::to_string(rows) + "x" + std::to_string(dim) +
                        " float32 values, file holds " + std::to_string(actual_payload) +
                        " bytes");
    }
    const std::uint64_t expected_payload = rows * 4ull * dim;
    if (expected_payload != actual_payload) {
        throw DataError("'" + path.string() + "': payload size mismatch at offset " +
                        std::to_string(kEmbeddingHeaderSize) + ": expected " +
                        std::to_string(expected_payload) + " bytes, file holds " +
                        std::to_string(actual_payload));
    }

    std::vector<unsigned char> payload(actual_payload);
    in.read(reinterpret_cast<char*>(payload.data()),
            static_cast<std::streamsize>(payload.size()));
    if (!in) throw DataError("'" + path.string() + "': failed to read payload");

    std::vector<double> data(rows * dim);
    for (std::size_t i = 0; i < data.size(); ++i) {
        const float v = std::bit_cast<float>(read_u32_le(payload.data() + 4 * i));
        if (!std::isfinite(v)) {
            throw DataError("'" + path.string() + "': non-finite value at byte offset " +
                            std::to_string(kEmbeddingHeaderSize + 4 * i) + " (row " +
                            std::to_string(i / dim) + ", column " + std::to_string(i % dim) +
                            ")");
        }
        data[i] = static_cast<double>(v);
    }
    return EmbeddingSet(std::move(data), rows, dim, false);
}

EmbeddingSet read_embeddings_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path.string() + "'");

    std::vector<double> data;
    std::size_t rows = 0;
    std::size_t dim = 0;
    std::string line;
    std::size_t line_number = 0;
    bool first_content_line = true;

    while (std::getline(in, line)) {
        ++line_number;
        if (trim(line).empty()) continue;
        const auto fields = split_fields(line);

        if (first_content_line) {
            first_content_line = false;
            double probe;
            if (!parse_double(fields.front(), probe)) continue;  // header line
        }
        if (dim == 0) {
            dim = fields.size();
        } else if (fields.size() != dim) {
            throw DataError("'" + path.string() + "' line " + std::to_string(line_number) +
                            ": expected " + std::to_string(dim) + " fields, got " +
                            std::to_string(fields.size()));
        }
        for (const auto field : fields) {
            double v;
            if (!parse_double(field, v)) {
                throw DataError("'" + path.string() + "' line " + std::to_string(line_number) +
                                ": invalid numeric field '" + std::string(field) + "'");
            }
            if (!std::isfinite(v)) {
                throw DataError("'" + path.string() + "' line " + std::to_string(line_number) +
                                ": non-finite value '" + std::string(field) + "'");
            }
            data.push_back(v);
        }
        ++rows;
    }
    if (rows == 0) throw DataError("'" + path.string() + "': no data rows");
    return EmbeddingSet(std::move(data), rows, dim, false);
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

json angle_to_json(const AngleReport& a) {
    json j{{"radians", a.radians}, {"convention", a.convention}, {"source", a.source}};
    if (a.cosine.has_value()) j["cosine_threshold"] = *a.cosine;
    return j;
}

json curve_to_json(const std::vector<CurvePoint>& curve) {
    json arr = json::array();
    for (const CurvePoint& point : curve) {
        json j{{"cos_delta", point.cos_delta}};
        if (point.ok) {
            j["capacity"] = point.estimate.capacity;  // non-finite dumps as null
            j["omega1"] = point.estimate.omega1.radians();
            j["omega2"] = point.estimate.omega2.radians();
            j["clamped_population"] = point.estimate.clamped_population;
            j["clamped_identity"] = point.estimate.clamped_identity;
            j["degenerate"] = point.estimate.degenerate;
        } else {
            j["error"] = point.error;
        }
        arr.push_back(std::move(j));
    }
    return arr;
}

void append_curve_csv(std::string& out, const std::vector<CurvePoint>& curve,
                      const std::string& row_prefix) {
    for (const CurvePoint& point : curve) {
        if (!point.ok) continue;  // error entries are JSON-only
        out += row_prefix;
        out += format_double(point.cos_delta);
        out += ',';
        out += format_double(point.estimate.capacity);
        out += ',';
        out += point.estimate.clamped_population ? "true" : "false";
        out += ',';
        out += point.estimate.clamped_identity ? "true" : "false";
        out += '\n';
    }
}

void write_text(const std::string& text, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
    out << text;
    if (!out) throw DataError("failed writing '" + path.string() + "'");
}

}  // namespace

EmbeddingSet read_embeddings(const std::filesystem::path& path, EmbeddingFormat format) {
    if (format == EmbeddingFormat::Binary) return read_embeddings_binary(path);
    if (format == EmbeddingFormat::Csv) return read_embeddings_csv(path);

    std::ifstream probe(path, std::ios::binary);
    if (!probe) throw DataError("cannot open '" + path.string() + "'");
    char magic[4] = {};
    probe.read(magic, sizeof magic);
    if (probe.gcount() == 4 && std::memcmp(magic, kEmbeddingMagic, 4) == 0) {
        return read_embeddings_binary(path);
    }
    return read_embeddings_csv(path);
}

void write_embeddings(const EmbeddingSet& e, const std::filesystem::path& path) {
    std::vector<unsigned char> bytes(kEmbeddingHeaderSize + e.rows() * e.dim() * 4);
    std::memcpy(bytes.data(), kEmbeddingMagic, 4);
    put_u32_le(kEmbeddingVersion, bytes.data() + 4);
    put_u64_le(e.rows(), bytes.data() + 8);
    put_u32_le(static_cast<std::uint32_t>(e.dim()), bytes.data() + 16);
    bytes[20] = 0;  // dtype float32
    bytes[21] = bytes[22] = bytes[23] = 0;

    const std::vector<double>& data = e.data();
    for (std::size_t i = 0; i < data.size(); ++i) {
        put_u32_le(std::bit_cast<std::uint32_t>(static_cast<float>(data[i])),
                   bytes.data() + kEmbeddingHeaderSize + 4 * i);
    }

    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("failed writing '" + path.string() + "'");
}

LabelTable read_labels(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path.string() + "'");

    std::string line;
    if (!std::getline(in, line) || trim(line).empty()) {
        throw DataError("'" + path.string() + "': missing header line");
    }
    // Copy the header names: the views from split_fields would dangle once
    // getline reuses the line buffer.
    std::vector<std::string> header;
    for (const auto field : split_fields(line)) header.emplace_back(field);
    std::size_t row_column = header.size();
    std::size_t identity_column = header.size();
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (header[c] == "row") {
            row_column = c;
        } else if (header[c] == "identity") {
            identity_column = c;
        }
    }
    if (row_column == header.size()) {
        throw DataError("'" + path.string() + "': header has no 'row' column");
    }

    LabelTable table;
    std::size_t line_number = 1;
    while (std::getline(in, line)) {
        ++line_number;
        if (trim(line).empty()) continue;
        const auto fields = split_fields(line);
        if (fields.size() != header.size()) {
            throw DataError("'" + path.string() + "' line " + std::to_string(line_number) +
                            ": expected " + std::to_string(header.size()) + " fields, got " +
                            std::to_string(fields.size()));
        }

        std::size_t row = 0;
        {
            const auto field = fields[row_column];
            const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), row);
            if (ec != std::errc{} || ptr != field.data() + field.size() || field.empty()) {
                throw DataError("'" + path.string() + "' line " + std::to_string(line_number) +
                                ": invalid row index '" + std::string(field) + "'");
            }
        }

        LabelTable::Record record;
        for (std::size_t c = 0; c < header.size(); ++c) {
            if (c == row_column || fields[c].empty()) continue;
            if (c == identity_column) {
                record.identity = std::string(fields[c]);
            } else {
                record.attributes.emplace(header[c], std::string(fields[c]));
            }
        }
        table.insert(row, std::move(record));
    }
    return table;
}

std::vector<double> read_scores(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path.string() + "'");

    std::vector<double> scores;
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        const auto field = trim(line);
        if (field.empty()) continue;
        double v;
        if (!parse_double(field, v) || !std::isfinite(v)) {
            throw DataError("'" + path.string() + "' line " + std::to_string(line_number) +
                            ": invalid score '" + std::string(field) + "'");
        }
        scores.push_back(v);
    }
    if (scores.empty()) throw DataError("'" + path.string() + "': no scores");
    return scores;
}

std::string render_report(const EstimateReport& report, ReportFormat format) {
    if (format == ReportFormat::Csv) {
        std::string out = "cos_delta,capacity,clamped_population,clamped_identity\n";
        append_curve_csv(out, report.curve, "");
        return out;
    }
    const json j{{"tool_version", kToolVersion},
                 {"n_dim", report.n_dim},
                 {"population_percentile", report.population_percentile},
                 {"theta", angle_to_json(report.theta)},
                 {"phi", angle_to_json(report.phi)},
                 {"delta_convention", report.delta_convention},
                 {"curve", curve_to_json(report.curve)}};
    return j.dump(2) + "\n";
}

std::string render_report(const SubgroupReportFile& file, ReportFormat format) {
    if (format == ReportFormat::Csv) {
        std::string out =
            "category,member_count,theta_radians,cos_delta,capacity,"
            "clamped_population,clamped_identity\n";
        for (const SubgroupResult& group : file.report.groups) {
            append_curve_csv(out, group.curve,
                             group.category + "," + std::to_string(group.member_count) + "," +
                                 format_double(group.theta.radians()) + ",");
        }
        return out;
    }
    json groups = json::array();
    for (const SubgroupResult& group : file.report.groups) {
        groups.push_back({{"category", group.category},
                          {"member_count", group.member_count},
                          {"theta",
                           {{"radians", group.theta.radians()},
                            {"cosine_threshold", group.threshold}}},
                          {"curve", curve_to_json(group.curve)}});
    }
    json skipped = json::array();
    for (const SubgroupSkip& skip : file.report.skipped) {
        skipped.push_back({{"category", skip.category},
                           {"member_count", skip.member_count},
                           {"reason", skip.reason}});
    }
    const json j{{"tool_version", kToolVersion},
                 {"n_dim", file.n_dim},
                 {"population_percentile", file.population_percentile},
                 {"attribute", file.report.attribute},
                 {"phi", angle_to_json(file.phi)},
                 {"theta_convention", file.theta_convention},
                 {"delta_convention", file.delta_convention},
                 {"groups", groups},
                 {"skipped", skipped}};
    return j.dump(2) + "\n";
}

void write_report(const EstimateReport& report, const std::filesystem::path& path,
                  ReportFormat format) {
    write_text(render_report(report, format), path);
}

void write_report(const SubgroupReportFile& report, const std::filesystem::path& path,
                  ReportFormat format) {
    write_text(render_report(report, format), path);
}

}  // namespace capest::io
