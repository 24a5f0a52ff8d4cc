#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "capest/capacity.hpp"
#include "capest/demographics.hpp"
#include "capest/empirical.hpp"
#include "capest/errors.hpp"
#include "capest/io.hpp"
#include "capest/oracle.hpp"
#include "capest/version.hpp"

namespace {

using namespace capest;

std::string single_line(std::string text) {
    for (char& c : text) {
        if (c == '\n' || c == '\r') c = ' ';
    }
    return text;
}

io::EmbeddingFormat parse_embedding_format(const std::string& name) {
    if (name == "auto") return io::EmbeddingFormat::Auto;
    if (name == "binary") return io::EmbeddingFormat::Binary;
    if (name == "csv") return io::EmbeddingFormat::Csv;
    throw DomainError("unknown embedding format '" + name + "'");
}

io::ReportFormat parse_report_format(const std::string& name) {
    if (name == "json") return io::ReportFormat::Json;
    if (name == "csv") return io::ReportFormat::Csv;
    throw DomainError("unknown output format '" + name + "'");
}

struct PipelineArgs {
    std::string embeddings_path;
    std::string format = "auto";
    double phi_cos = 0.0;
    bool has_phi_cos = false;
    std::string phi_labels_path;
    std::string phi_impostors_path;
    double far = 0.001;
    double percentile = 5.0;
    double per_id_percentile = 5.0;
    std::string delta_grid;
    std::vector<double> delta_list;
    std::string theta_convention = "half";
    std::string phi_convention = "half";
    std::string delta_convention = "full";
    int dim_override = 0;
    std::size_t bins = ScoreHistogram::kDefaultBinCount;
    unsigned threads = 0;
    std::string output = "-";
    std::string output_format = "json";
    bool verbose = false;

    // subgroup only
    std::string labels_path;
    std::string attribute;
    std::size_t min_group_size = 50;
};

void add_pipeline_options(CLI::App* cmd, PipelineArgs& args) {
    cmd->add_option("--embeddings", args.embeddings_path, "embedding file (EMB1 binary or CSV)")
        ->required();
    cmd->add_option("--input-format", args.format, "auto|binary|csv")
        ->check(CLI::IsMember({"auto", "binary", "csv"}));

    auto* phi_source = cmd->add_option_group("phi-source", "intra-class angle source");
    auto* phi_cos_opt =
        phi_source->add_option("--phi-cos", args.phi_cos, "fixed cosine threshold for phi");
    phi_source->add_option("--phi-from-labels", args.phi_labels_path,
                           "labels CSV with identities; phi from per-identity scores");
    auto* imp_opt = phi_source->add_option("--phi-from-impostors", args.phi_impostors_path,
                                           "impostor score file; phi from its FAR threshold");
    phi_source->require_option(1);
    phi_cos_opt->each([&args](const std::string&) { args.has_phi_cos = true; });

    cmd->add_option("--far", args.far, "false acceptance rate for --phi-from-impostors")
        ->needs(imp_opt);

    cmd->add_option("--percentile", args.percentile,
                    "population percentile of the pairwise score distribution");
    cmd->add_option("--per-id-percentile", args.per_id_percentile,
                    "per-identity percentile for --phi-from-labels");

    auto* delta_source = cmd->add_option_group("delta-grid", "cos(delta) threshold sweep");
    delta_source->add_option("--delta-grid", args.delta_grid,
                             "lo:hi:steps linear sweep over cos(delta), inclusive");
    delta_source->add_option("--delta-list", args.delta_list,
                             "explicit comma-separated cos(delta) values")
        ->delimiter(',');
    delta_source->require_option(1);

    cmd->add_option("--theta-convention", args.theta_convention, "half|full")
        ->check(CLI::IsMember({"half", "full"}));
    cmd->add_option("--phi-convention", args.phi_convention, "half|full")
        ->check(CLI::IsMember({"half", "full"}));
    cmd->add_option("--delta-convention", args.delta_convention, "half|full")
        ->check(CLI::IsMember({"half", "full"}));

    cmd->add_option("--dim", args.dim_override,
                    "ambient dimension for the capacity formula (default: embedding dim)");
    cmd->add_option("--bins", args.bins, "histogram bin count");
    cmd->add_option("--threads", args.threads, "worker thread cap (0 = hardware)");
    cmd->add_option("--output", args.output, "output path, '-' for stdout");
    cmd->add_option("--output-format", args.output_format, "json|csv")
        ->check(CLI::IsMember({"json", "csv"}));
    cmd->add_flag("--verbose", args.verbose, "progress notes on stderr");
}

std::vector<double> resolve_delta_cosines(const PipelineArgs& args) {
    if (!args.delta_list.empty()) return args.delta_list;

    const std::string& spec = args.delta_grid;
    const std::size_t c1 = spec.find(':');
    const std::size_t c2 = c1 == std::string::npos ? std::string::npos : spec.find(':', c1 + 1);
    if (c2 == std::string::npos) {
        throw DomainError("--delta-grid expects lo:hi:steps, got '" + spec + "'");
    }
    double lo = 0.0, hi = 0.0;
    long steps = 0;
    try {
        lo = std::stod(spec.substr(0, c1));
        hi = std::stod(spec.substr(c1 + 1, c2 - c1 - 1));
        steps = std::stol(spec.substr(c2 + 1));
    } catch (const std::exception&) {
        throw DomainError("--delta-grid expects lo:hi:steps, got '" + spec + "'");
    }
    if (steps < 1) throw DomainError("--delta-grid needs at least 1 step");

    std::vector<double> cosines;
    cosines.reserve(static_cast<std::size_t>(steps));
    if (steps == 1) {
        cosines.push_back(lo);
    } else {
        for (long i = 0; i + 1 < steps; ++i) {
            cosines.push_back(lo + (hi - lo) * static_cast<double>(i) /
                                       static_cast<double>(steps - 1));
        }
        cosines.push_back(hi);  // inclusive endpoint, exactly
    }
    return cosines;
}

struct ResolvedPhi {
    Angle phi;
    io::AngleReport report;
};

ResolvedPhi resolve_phi(const PipelineArgs& args, const EmbeddingSet& embeddings) {
    const AngleConvention conv = angle_convention_from_string(args.phi_convention);
    if (args.has_phi_cos) {
        const Angle phi = angle_from_cosine(args.phi_cos, conv);
        return {phi, {phi.radians(), args.phi_cos, to_string(conv), "fixed-cosine"}};
    }
    if (!args.phi_labels_path.empty()) {
        const LabelTable labels = io::read_labels(args.phi_labels_path);
        const IntraClassAngle intra =
            estimate_conditional_intra_angle(embeddings, labels, args.per_id_percentile, conv);
        return {intra.phi,
                {intra.phi.radians(), intra.threshold, to_string(conv), "conditional-labels"}};
    }
    ScoreHistogram hist(args.bins);
    for (double s : io::read_scores(args.phi_impostors_path)) hist.add(s);
    const double threshold = far_threshold(hist, args.far);
    const Angle phi = angle_from_cosine(threshold, conv);
    return {phi, {phi.radians(), threshold, to_string(conv), "impostor-far"}};
}

void emit_estimate(const io::EstimateReport& report, const PipelineArgs& args) {
    const io::ReportFormat format = parse_report_format(args.output_format);
    if (args.output == "-") {
        std::cout << io::render_report(report, format);
    } else {
        io::write_report(report, args.output, format);
    }
}

void emit_subgroup(const io::SubgroupReportFile& report, const PipelineArgs& args) {
    const io::ReportFormat format = parse_report_format(args.output_format);
    if (args.output == "-") {
        std::cout << io::render_report(report, format);
    } else {
        io::write_report(report, args.output, format);
    }
}

int run_estimate(const PipelineArgs& args) {
    EmbeddingSet embeddings = normalize_rows(
        io::read_embeddings(args.embeddings_path, parse_embedding_format(args.format)));
    const int n_dim =
        args.dim_override > 0 ? args.dim_override : static_cast<int>(embeddings.dim());
    if (args.verbose) {
        std::cerr << "loaded " << embeddings.rows() << " x " << embeddings.dim()
                  << " embeddings, capacity dimension " << n_dim << "\n";
    }

    const AngleConvention theta_conv = angle_convention_from_string(args.theta_convention);
    const AngleConvention delta_conv = angle_convention_from_string(args.delta_convention);

    const PopulationAngle theta = estimate_population_angle(
        embeddings, args.percentile, theta_conv, args.bins, args.threads);
    if (args.verbose) {
        std::cerr << "theta = " << theta.theta.radians() << " rad (s_th = " << theta.threshold
                  << ")\n";
    }
    const ResolvedPhi phi = resolve_phi(args, embeddings);
    if (args.verbose) {
        std::cerr << "phi = " << phi.phi.radians() << " rad (" << phi.report.source << ")\n";
    }

    io::EstimateReport report;
    report.n_dim = n_dim;
    report.population_percentile = args.percentile;
    report.theta = {theta.theta.radians(), theta.threshold, to_string(theta_conv),
                    "population-percentile"};
    report.phi = phi.report;
    report.delta_convention = to_string(delta_conv);
    report.curve =
        capacity_curve(n_dim, theta.theta, phi.phi, resolve_delta_cosines(args), delta_conv);

    emit_estimate(report, args);
    return 0;
}

int run_subgroup(const PipelineArgs& args) {
    EmbeddingSet embeddings = normalize_rows(
        io::read_embeddings(args.embeddings_path, parse_embedding_format(args.format)));
    const int n_dim =
        args.dim_override > 0 ? args.dim_override : static_cast<int>(embeddings.dim());

    const LabelTable labels = io::read_labels(args.labels_path);
    const ResolvedPhi phi = resolve_phi(args, embeddings);

    SubgroupOptions options;
    options.population_percentile = args.percentile;
    options.min_group_size = args.min_group_size;
    options.theta_convention = angle_convention_from_string(args.theta_convention);
    options.delta_convention = angle_convention_from_string(args.delta_convention);
    options.bin_count = args.bins;
    options.threads = args.threads;

    io::SubgroupReportFile file;
    file.n_dim = n_dim;
    file.population_percentile = args.percentile;
    file.phi = phi.report;
    file.theta_convention = to_string(options.theta_convention);
    file.delta_convention = to_string(options.delta_convention);
    file.report = subgroup_capacities(embeddings, labels, args.attribute, phi.phi,
                                      resolve_delta_cosines(args), n_dim, options);

    emit_subgroup(file, args);
    return 0;
}

struct McArgs {
    int dim = 2;
    double omega1 = 0.0;
    double omega2 = 0.0;
    std::size_t samples = 1000000;
    std::uint64_t seed = 0;
    unsigned threads = 0;
};

int run_mc_validate(const McArgs& args) {
    const double formula = capacity_from_omegas(args.dim, Angle(args.omega1), Angle(args.omega2));
    const McResult mc1 =
        mc_cap_fraction(args.dim, args.omega1, args.samples, derive_seed(args.seed, 1),
                        args.threads);
    const McResult mc2 =
        mc_cap_fraction(args.dim, args.omega2, args.samples, derive_seed(args.seed, 2),
                        args.threads);

    std::printf("formula_capacity=%.10g\n", formula);
    std::printf("mc_fraction1=%.10g std_error1=%.4g\n", mc1.fraction, mc1.std_error);
    std::printf("mc_fraction2=%.10g std_error2=%.4g\n", mc2.fraction, mc2.std_error);
    if (mc2.fraction == 0.0) {
        std::printf("mc_capacity=undefined\nFAIL\n");
        std::cerr << "error: numerical: denominator cap received no Monte Carlo hits\n";
        return 3;
    }

    const double ratio = mc1.fraction / mc2.fraction;
    const double rel = std::sqrt(std::pow(mc1.std_error / mc1.fraction, 2) +
                                 std::pow(mc2.std_error / mc2.fraction, 2));
    const double sigma = ratio * rel;
    const double z = sigma > 0.0 ? std::fabs(ratio - formula) / sigma : 0.0;
    std::printf("mc_capacity=%.10g std_error=%.4g\n", ratio, sigma);
    std::printf("z=%.3f\n", z);

    const bool pass = std::fabs(ratio - formula) <= 4.0 * sigma;
    std::printf("%s\n", pass ? "PASS" : "FAIL");
    return pass ? 0 : 3;
}

struct SynthArgs {
    std::size_t identities = 0;
    std::size_t per_identity = 0;
    double kappa = 100.0;
    int dim = 2;
    std::uint64_t seed = 0;
    std::string out_path;
    std::string labels_path;
};

int run_synth(const SynthArgs& args) {
    const SynthDataset dataset =
        synth_identities(args.dim, args.identities, args.per_identity, args.kappa, args.seed);
    io::write_embeddings(dataset.embeddings, args.out_path);

    std::string csv = "row,identity\n";
    for (const auto& [row, record] : dataset.labels.records()) {
        csv += std::to_string(row);
        csv += ',';
        csv += record.identity.value_or("");
        csv += '\n';
    }
    std::ofstream out(args.labels_path, std::ios::binary);
    if (!out) throw DataError("cannot open '" + args.labels_path + "' for writing");
    out << csv;
    if (!out) throw DataError("failed writing '" + args.labels_path + "'");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"biometric capacity estimation for hyperspherical embedding sets"};
    app.set_version_flag("--version", capest::kToolVersion);
    app.require_subcommand(1);

    PipelineArgs estimate_args;
    CLI::App* estimate = app.add_subcommand(
        "estimate", "capacity curve of an embedding set over a cos(delta) sweep");
    add_pipeline_options(estimate, estimate_args);

    PipelineArgs subgroup_args;
    CLI::App* subgroup =
        app.add_subcommand("subgroup", "per-category capacity for a label attribute");
    add_pipeline_options(subgroup, subgroup_args);
    subgroup->add_option("--labels", subgroup_args.labels_path, "labels CSV")->required();
    subgroup->add_option("--attribute", subgroup_args.attribute, "attribute column to split on")
        ->required();
    subgroup->add_option("--min-group-size", subgroup_args.min_group_size,
                         "categories smaller than this are skipped");

    McArgs mc_args;
    CLI::App* mc = app.add_subcommand(
        "mc-validate", "Monte Carlo cross-check of the cap-ratio capacity formula");
    mc->add_option("--dim", mc_args.dim, "ambient dimension")->required();
    mc->add_option("--omega1", mc_args.omega1, "numerator cap half-angle, radians")->required();
    mc->add_option("--omega2", mc_args.omega2, "denominator cap half-angle, radians")->required();
    mc->add_option("--samples", mc_args.samples, "Monte Carlo sample count");
    mc->add_option("--seed", mc_args.seed, "RNG seed");
    mc->add_option("--threads", mc_args.threads, "worker thread cap (0 = hardware)");

    SynthArgs synth_args;
    CLI::App* synth =
        app.add_subcommand("synth", "synthesize vMF identity clusters plus labels");
    synth->add_option("--identities", synth_args.identities, "number of identities")->required();
    synth->add_option("--per-identity", synth_args.per_identity, "rows per identity")->required();
    synth->add_option("--kappa", synth_args.kappa, "vMF concentration (0 = uniform)");
    synth->add_option("--dim", synth_args.dim, "embedding dimension")->required();
    synth->add_option("--seed", synth_args.seed, "RNG seed");
    synth->add_option("--out", synth_args.out_path, "EMB1 output path")->required();
    synth->add_option("--labels-out", synth_args.labels_path, "labels CSV output path")
        ->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: usage: " << single_line(e.what()) << "\n";
        return 1;
    }

    try {
        if (*estimate) return run_estimate(estimate_args);
        if (*subgroup) return run_subgroup(subgroup_args);
        if (*mc) return run_mc_validate(mc_args);
        if (*synth) return run_synth(synth_args);
        std::cerr << "error: usage: no subcommand\n";
        return 1;
    } catch (const capest::DomainError& e) {
        std::cerr << "error: usage: " << single_line(e.what()) << "\n";
        return 1;
    } catch (const capest::NumericalError& e) {
        std::cerr << "error: numerical: " << single_line(e.what()) << "\n";
        return 3;
    } catch (const capest::DataError& e) {
        std::cerr << "error: data: " << single_line(e.what()) << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: data: " << single_line(e.what()) << "\n";
        return 2;
    }
}
