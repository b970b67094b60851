// perturba: command-line front end for the correction routines and experiment drivers.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "perturba/error.hpp"
#include "perturba/experiment.hpp"
#include "perturba/io.hpp"
#include "perturba/perturb.hpp"
#include "perturba/regular.hpp"
#include "perturba/stability.hpp"

namespace {

using namespace perturba;

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 1;
constexpr int kExitHypothesis = 2;

std::string stem_of(const std::string& path) {
    const auto slash = path.find_last_of('/');
    const auto dot = path.find_last_of('.');
    if (dot != std::string::npos && (slash == std::string::npos || dot > slash)) {
        return path.substr(0, dot);
    }
    return path;
}

struct Outputs {
    std::string out;
    std::string cert;

    void resolve(const std::string& input) {
        if (out.empty()) {
            out = stem_of(input) + ".out.json";
        }
        if (cert.empty()) {
            cert = stem_of(input) + ".cert.json";
        }
    }
};

void add_outputs(CLI::App* cmd, Outputs& o) {
    cmd->add_option("--out", o.out, "Output file (default <stem>.out.json)");
    cmd->add_option("--cert", o.cert, "Certificate file (default <stem>.cert.json)");
}

void write_corrected(const Outputs& o, const Corrected<CMatrix>& r) {
    io::write_text_file(o.out, io::matrix_to_json(r.value) + "\n");
    io::write_text_file(o.cert, io::certificate_to_json(r.cert) + "\n");
}

CMatrix read_matrix(const std::string& path) {
    return io::matrix_from_json(io::read_json_file(path));
}

BlockComposition composition_arg(const std::string& text) {
    return BlockComposition(io::parse_size_list(text));
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Perturbation corrections for structured matrices, with certificates."};
    app.require_subcommand(1);
    app.set_version_flag("--version", kArtifactVersion);

    std::string input;
    std::string second;
    Outputs outputs;

    auto* project = app.add_subcommand("project", "Round a near-idempotent Hermitian matrix to a projection");
    project->add_option("input", input, "Matrix JSON")->required();
    add_outputs(project, outputs);

    auto* pisofix = app.add_subcommand("pisofix", "Round an approximate partial isometry to an exact one");
    pisofix->add_option("input", input, "Matrix JSON")->required();
    add_outputs(pisofix, outputs);

    auto* conjugate = app.add_subcommand("conjugate", "Unitary u with u p u* = q for nearby projections");
    conjugate->add_option("p", input, "Projection p (JSON)")->required();
    conjugate->add_option("q", second, "Projection q (JSON)")->required();
    add_outputs(conjugate, outputs);

    std::string composition;
    bool free_range = false;
    auto* triangularize = app.add_subcommand("triangularize", "Make a partial isometry block upper triangular");
    triangularize->add_option("input", input, "Partial isometry JSON")->required();
    triangularize->add_option("--composition", composition, "Block sizes, e.g. 1,1")->required();
    triangularize->add_flag("--free-range", free_range, "Do not require a block-diagonal final projection");
    add_outputs(triangularize, outputs);

    std::string pattern_file;
    std::string masa_file;
    auto* normfix = app.add_subcommand("normfix", "Round an approximate normalizer of a masa to an exact one");
    normfix->add_option("input", input, "Matrix JSON")->required();
    normfix->add_option("--pattern", pattern_file, "Pattern JSON (default: all pairs)");
    normfix->add_option("--masa", masa_file, "Masa JSON (default: full diagonal)");
    add_outputs(normfix, outputs);

    auto* distance = app.add_subcommand("distance", "Distance to a nest algebra or to a masa");
    distance->add_option("input", input, "Matrix JSON")->required();
    auto* dist_comp = distance->add_option("--composition", composition, "Nest block sizes");
    auto* dist_masa = distance->add_option("--masa", masa_file, "Masa JSON");
    dist_comp->excludes(dist_masa);
    distance->add_option("--out", outputs.out, "Output file (default <stem>.out.json)");

    auto* stabilize = app.add_subcommand("stabilize", "Exact nest embedding near an embedding bundle");
    stabilize->add_option("input", input, "Embedding bundle JSON")->required();
    stabilize->add_option("--composition", composition, "Target nest block sizes")->required();
    add_outputs(stabilize, outputs);

    std::string config_file;
    std::string csv_out = "results.csv";
    std::string manifest_out;
    ConfigMap flags;
    auto* experiment = app.add_subcommand("experiment", "Run a seeded ensemble experiment");
    experiment->add_option("--config", config_file, "key=value file or a previous manifest");
    experiment->add_option("--out", csv_out, "Results CSV")->capture_default_str();
    experiment->add_option("--manifest", manifest_out, "Manifest JSON (default <csv stem>.manifest.json)");
    for (const char* key : {"experiment", "composition", "vertices", "pairs", "multiplicity", "epsilons", "trials",
                            "seed", "depth", "dimension", "free_range", "threads", "timing"}) {
        std::string flag = std::string("--") + key;
        for (char& ch : flag) {
            if (ch == '_') {
                ch = '-';
            }
        }
        experiment->add_option_function<std::string>(
            flag, [&flags, key](const std::string& v) { flags[key] = v; }, std::string("Override ") + key);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitInvalid;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    try {
        if (*project) {
            outputs.resolve(input);
            write_corrected(outputs, round_to_projection(read_matrix(input)));
        } else if (*pisofix) {
            outputs.resolve(input);
            write_corrected(outputs, fix_partial_isometry(read_matrix(input)));
        } else if (*conjugate) {
            outputs.resolve(input);
            write_corrected(outputs, conjugating_unitary(read_matrix(input), read_matrix(second)));
        } else if (*triangularize) {
            outputs.resolve(input);
            TriangularizeOptions options;
            options.require_block_diagonal_range = !free_range;
            write_corrected(outputs, block_triangularize(read_matrix(input), composition_arg(composition), options));
        } else if (*normfix) {
            outputs.resolve(input);
            const CMatrix v = read_matrix(input);
            const auto n = static_cast<std::size_t>(v.rows());
            const IncidencePattern pattern =
                pattern_file.empty() ? IncidencePattern::full(n) : io::pattern_from_json(io::read_json_file(pattern_file));
            const MasaPartition masa =
                masa_file.empty() ? MasaPartition::full_diagonal(n) : io::masa_from_json(io::read_json_file(masa_file));
            write_corrected(outputs, fix_normalizer(v, pattern, masa));
        } else if (*distance) {
            outputs.resolve(input);
            const CMatrix x = read_matrix(input);
            std::string text;
            if (!composition.empty()) {
                text = "{\"arveson_distance\": " + io::format_double(arveson_distance(x, composition_arg(composition))) +
                       "}";
            } else {
                const MasaPartition masa = masa_file.empty() ? MasaPartition::full_diagonal(static_cast<std::size_t>(x.rows()))
                                                             : io::masa_from_json(io::read_json_file(masa_file));
                const MasaDistance d = masa_distance(x, masa);
                text = "{\"estimate\": " + io::format_double(d.estimate) +
                       ", \"commutator_bound\": " + io::format_double(d.commutator_bound) +
                       ", \"exhaustive\": " + (d.exhaustive ? "true" : "false") + "}";
            }
            io::write_text_file(outputs.out, text + "\n");
        } else if (*stabilize) {
            outputs.resolve(input);
            const StarEmbedding phi = io::embedding_from_json(io::read_json_file(input));
            const StabilityResult r = stabilize_nest_inclusion(phi, composition_arg(composition));
            CorrectionCertificate cert;
            cert.input_defect = r.report.containment_defect;
            cert.correction_distance = r.report.max_distance;
            cert.structural_residual = std::max(r.report.matrix_unit_residual, r.report.support_violation);
            io::write_text_file(outputs.out, io::embedding_to_json(r.psi) + "\n");
            io::write_text_file(outputs.cert, io::certificate_to_json(cert) + "\n");
        } else if (*experiment) {
            ConfigMap merged = config_file.empty() ? ConfigMap{} : load_config_file(config_file);
            if (const char* env = std::getenv("PERTURBA_SEED"); env != nullptr && *env != '\0') {
                merged["seed"] = env;
            }
            for (const auto& [k, v] : flags) {
                merged[k] = v;
            }
            const ExperimentSettings settings = settings_from(merged);
            const ExperimentResult result = run_experiment(settings);
            if (manifest_out.empty()) {
                manifest_out = stem_of(csv_out) + ".manifest.json";
            }
            io::write_text_file(csv_out, results_csv(result));
            io::write_text_file(manifest_out, manifest_json(result, csv_out));
        }
    } catch (const Error& e) {
        const bool hypothesis = is_hypothesis_failure(e.kind());
        std::cerr << "perturba " << command << ": " << (hypothesis ? "hypothesis failed: " : "error: ") << e.what()
                  << "\n";
        return hypothesis ? kExitHypothesis : kExitInvalid;
    } catch (const std::exception& e) {
        std::cerr << "perturba " << command << ": error: " << e.what() << "\n";
        return kExitInvalid;
    }
    return kExitOk;
}
