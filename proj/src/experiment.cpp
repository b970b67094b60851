#include "perturba/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <thread>

#include "perturba/error.hpp"
#include "perturba/io.hpp"
#include "perturba/random.hpp"
#include "perturba/regular.hpp"
#include "perturba/stability.hpp"
#include "perturba/tower.hpp"

namespace perturba {

namespace {

const char* const kExperiments[] = {"stability", "regular-stability", "tower", "normfix-sweep", "triangularize-sweep"};

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) {
        return "";
    }
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

[[noreturn]] void invalid(const std::string& what) {
    throw Error(ErrorKind::InvalidConfig, "config", what);
}

std::size_t to_count(const std::string& key, const std::string& value) {
    const auto list = io::parse_size_list(value);
    if (list.size() != 1) {
        invalid(key + " must be a single nonnegative integer");
    }
    return list[0];
}

bool to_bool(const std::string& key, const std::string& value) {
    if (value == "1" || value == "true" || value == "yes") {
        return true;
    }
    if (value == "0" || value == "false" || value == "no") {
        return false;
    }
    invalid(key + " must be true or false");
}

std::string join(const std::vector<std::size_t>& xs) {
    std::string s;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        s += (k ? "," : "") + std::to_string(xs[k]);
    }
    return s;
}

std::string csv_number(double x) {
    if (std::isnan(x)) {
        return "nan";
    }
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

IncidencePattern experiment_pattern(const ExperimentSettings& s) {
    if (s.vertices == 0) {
        return nest_pattern(BlockComposition(s.composition));
    }
    std::vector<IndexPair> pairs;
    std::stringstream ss(s.pairs);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) {
            continue;
        }
        const auto colon = item.find(':');
        if (colon == std::string::npos) {
            invalid("pairs must look like \"1:2,2:3\"");
        }
        const auto i = io::parse_size_list(item.substr(0, colon));
        const auto j = io::parse_size_list(item.substr(colon + 1));
        if (i.size() != 1 || j.size() != 1 || i[0] < 1 || j[0] < 1 || i[0] > s.vertices || j[0] > s.vertices) {
            invalid("pair \"" + item + "\" is outside 1.." + std::to_string(s.vertices));
        }
        pairs.emplace_back(i[0] - 1, j[0] - 1);
    }
    return IncidencePattern::closure_of(s.vertices, pairs);
}

std::vector<double> tower_schedule(double eps0, std::size_t depth) {
    std::vector<double> out;
    for (std::size_t k = 1; k <= depth; ++k) {
        out.push_back(eps0 * std::ldexp(1.0, -static_cast<int>(k)));
    }
    return out;
}

struct TrialOutcome {
    double defect_in = 0.0;
    double recovery = 0.0;
    double residual = 0.0;
    std::size_t dim = 1;
};

TrialOutcome run_stability(const ExperimentSettings& s, double eps, std::uint64_t seed) {
    const BlockComposition comp(s.composition);
    const StarEmbedding phi = random_near_identity_embedding(nest_pattern(comp), s.multiplicity, eps, seed);
    const StabilityResult r = stabilize_nest_inclusion(phi, comp.ampliate(s.multiplicity));
    return {r.report.containment_defect, r.report.max_distance,
            std::max(r.report.matrix_unit_residual, r.report.support_violation), comp.total() * s.multiplicity};
}

TrialOutcome run_regular(const ExperimentSettings& s, double eps, std::uint64_t seed) {
    const IncidencePattern g = experiment_pattern(s);
    const std::size_t n = g.dim();
    const std::size_t m = s.multiplicity;
    const StarEmbedding phi = random_near_identity_embedding(g, m, eps, seed);
    const RegularResult r =
        regular_stabilize(phi, MasaPartition::ampliated(n, m), g.ampliate(m), MasaPartition::full_diagonal(n * m));
    return {r.report.containment_defect, r.report.max_distance,
            std::max({r.report.matrix_unit_residual, r.report.regularity_defect, r.report.support_violation}), n * m};
}

TrialOutcome run_tower(const ExperimentSettings& s, double eps, std::uint64_t seed) {
    const TowerConfig cfg = doubling_tower(experiment_pattern(s), s.depth, tower_schedule(eps, s.depth), seed);
    const Tower exact = generate_tower(cfg);
    const Tower perturbed = perturb_tower(exact, cfg);
    TrialOutcome out;
    out.dim = perturbed.front().embedding.images.ambient_dim;
    for (const TowerLevel& level : perturbed) {
        out.defect_in = std::max(out.defect_in, containment_defect(level.embedding.images, level.ambient_pattern).value);
    }
    const ChainRecovery chain = recover_chain(perturbed);
    out.recovery = chain.partial_sums.empty() ? 0.0 : chain.partial_sums.back();
    for (const RegularReport& r : chain.reports) {
        out.residual = std::max({out.residual, r.matrix_unit_residual, r.regularity_defect, r.support_violation});
    }
    return out;
}

TrialOutcome run_normfix(const ExperimentSettings& s, double eps, std::uint64_t seed) {
    Rng rng(seed);
    const std::size_t n = s.dimension;
    const CMatrix perm = random_phase_permutation(n, rng);
    const CMatrix v = exp_skew(random_skew(n, eps, rng)) * perm;
    const Corrected<CMatrix> r = fix_normalizer(v, IncidencePattern::full(n), MasaPartition::full_diagonal(n));
    return {r.cert.input_defect, r.cert.correction_distance, r.cert.structural_residual, n};
}

TrialOutcome run_triangularize(const ExperimentSettings& s, double eps, std::uint64_t seed) {
    Rng rng(seed);
    const BlockComposition comp(s.composition);
    const std::size_t n = comp.total();
    CMatrix v = exp_skew(random_skew(n, eps, rng));
    TriangularizeOptions options;
    if (s.free_range) {
        // Diagonal projection onto half the coordinates, tilted: the range is no longer block diagonal.
        std::vector<std::size_t> order(n);
        for (std::size_t i = 0; i < n; ++i) {
            order[i] = i;
        }
        for (std::size_t i = n; i > 1; --i) {
            std::swap(order[i - 1], order[rng.index(i)]);
        }
        CMatrix d = CMatrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
        for (std::size_t k = 0; k < n / 2; ++k) {
            d(static_cast<Eigen::Index>(order[k]), static_cast<Eigen::Index>(order[k])) = 1.0;
        }
        v = v * d;
        options.require_block_diagonal_range = false;
    }
    const Corrected<CMatrix> r = block_triangularize(v, comp, options);
    return {r.cert.input_defect, r.cert.correction_distance, r.cert.structural_residual, n};
}

using TrialFn = std::function<TrialOutcome(const ExperimentSettings&, double, std::uint64_t)>;

TrialFn trial_function(const std::string& name) {
    if (name == "stability") {
        return run_stability;
    }
    if (name == "regular-stability") {
        return run_regular;
    }
    if (name == "tower") {
        return run_tower;
    }
    if (name == "normfix-sweep") {
        return run_normfix;
    }
    return run_triangularize;
}

} // namespace

ConfigMap parse_config_text(const std::string& text) {
    ConfigMap out;
    std::stringstream ss(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) {
            line.resize(hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            invalid("line " + std::to_string(lineno) + ": expected key = value");
        }
        const std::string key = trim(line.substr(0, eq));
        if (key.empty()) {
            invalid("line " + std::to_string(lineno) + ": empty key");
        }
        out[key] = trim(line.substr(eq + 1));
    }
    return out;
}

ConfigMap load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorKind::Io, "config", "cannot open " + path);
    }
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();
    if (trim(text).rfind('{', 0) != 0) {
        return parse_config_text(text);
    }
    const io::Json manifest = io::read_json_file(path);
    if (!manifest.contains("config") || !manifest.at("config").is_object()) {
        invalid(path + ": manifest has no config object");
    }
    ConfigMap out;
    for (const auto& [key, value] : manifest.at("config").items()) {
        if (!value.is_string()) {
            invalid(path + ": manifest config values must be strings");
        }
        out[key] = value.get<std::string>();
    }
    return out;
}

ConfigMap ExperimentSettings::to_map() const {
    ConfigMap m;
    m["experiment"] = experiment;
    m["composition"] = join(composition);
    m["vertices"] = std::to_string(vertices);
    m["pairs"] = pairs;
    m["multiplicity"] = std::to_string(multiplicity);
    std::string eps;
    for (std::size_t k = 0; k < epsilons.size(); ++k) {
        eps += (k ? "," : "") + csv_number(epsilons[k]);
    }
    m["epsilons"] = eps;
    m["trials"] = std::to_string(trials);
    m["seed"] = std::to_string(seed);
    m["depth"] = std::to_string(depth);
    m["dimension"] = std::to_string(dimension);
    m["free_range"] = free_range ? "true" : "false";
    m["threads"] = std::to_string(threads);
    m["timing"] = timing ? "true" : "false";
    return m;
}

ExperimentSettings settings_from(const ConfigMap& merged) {
    ExperimentSettings s;
    for (const auto& [key, value] : merged) {
        if (key == "experiment") {
            s.experiment = value;
        } else if (key == "composition") {
            s.composition = io::parse_size_list(value);
        } else if (key == "vertices") {
            s.vertices = to_count(key, value);
        } else if (key == "pairs") {
            s.pairs = value;
        } else if (key == "multiplicity") {
            s.multiplicity = to_count(key, value);
        } else if (key == "epsilons") {
            s.epsilons = io::parse_double_list(value);
        } else if (key == "trials") {
            s.trials = to_count(key, value);
        } else if (key == "seed") {
            const auto list = io::parse_size_list(value);
            if (list.size() != 1) {
                invalid("seed must be a single nonnegative integer");
            }
            s.seed = static_cast<std::uint64_t>(list[0]);
        } else if (key == "depth") {
            s.depth = to_count(key, value);
        } else if (key == "dimension") {
            s.dimension = to_count(key, value);
        } else if (key == "free_range") {
            s.free_range = to_bool(key, value);
        } else if (key == "threads") {
            s.threads = to_count(key, value);
        } else if (key == "timing") {
            s.timing = to_bool(key, value);
        } else {
            invalid("unknown key \"" + key + "\"");
        }
    }
    if (std::find(std::begin(kExperiments), std::end(kExperiments), s.experiment) == std::end(kExperiments)) {
        invalid("unknown experiment \"" + s.experiment +
                "\" (expected stability, regular-stability, tower, normfix-sweep or triangularize-sweep)");
    }
    if (s.composition.empty() || std::find(s.composition.begin(), s.composition.end(), 0) != s.composition.end()) {
        invalid("composition must list positive block sizes");
    }
    if (s.multiplicity == 0) {
        invalid("multiplicity must be positive");
    }
    if (s.threads == 0) {
        invalid("threads must be positive");
    }
    if (s.epsilons.empty()) {
        invalid("epsilons must not be empty");
    }
    for (double e : s.epsilons) {
        if (e < 0.0) {
            invalid("epsilons must be nonnegative");
        }
    }
    if (s.experiment == "tower") {
        if (s.depth == 0) {
            invalid("depth must be positive");
        }
        const std::size_t n = experiment_pattern(s).dim();
        if (s.depth > 10 || (n << (s.depth - 1)) > kMaxAmbientDim) {
            throw Error(ErrorKind::DimensionOverflow, "config",
                        "tower of depth " + std::to_string(s.depth) + " exceeds C^512");
        }
    } else if (s.experiment == "normfix-sweep") {
        if (s.dimension == 0 || s.dimension > kMaxAmbientDim) {
            invalid("dimension must lie in 1..512");
        }
    } else {
        std::size_t n = 0;
        for (std::size_t c : s.composition) {
            n += c;
        }
        const std::size_t vertices = s.experiment == "regular-stability" ? experiment_pattern(s).dim() : n;
        const std::size_t ambient = s.experiment == "triangularize-sweep" ? n : vertices * s.multiplicity;
        if (ambient > kMaxAmbientDim) {
            throw Error(ErrorKind::DimensionOverflow, "config",
                        "ambient dimension " + std::to_string(ambient) + " exceeds 512");
        }
    }
    return s;
}

ExperimentResult run_experiment(const ExperimentSettings& settings) {
    ExperimentResult result;
    result.settings = settings;
    const std::size_t total = settings.trials * settings.epsilons.size();
    result.rows.resize(total);
    const TrialFn fn = trial_function(settings.experiment);
    const Tolerances& tol = default_tolerances();

    auto run_one = [&](std::size_t index) {
        ExperimentRow& row = result.rows[index];
        row.trial = index % settings.trials;
        row.epsilon = settings.epsilons[index / settings.trials];
        const std::uint64_t seed = derive_seed(settings.seed, row.trial);
        const auto start = std::chrono::steady_clock::now();
        try {
            const TrialOutcome out = fn(settings, row.epsilon, seed);
            row.defect_in = out.defect_in;
            row.recovery_distance = out.recovery;
            row.structural_residual = out.residual;
            if (!(out.residual <= tol.struct_tol_for(out.dim))) {
                row.status = "FAILED:residual";
            }
        } catch (const Error& e) {
            row.defect_in = row.recovery_distance = row.structural_residual = std::nan("");
            row.status = "FAILED:" + e.stage();
        } catch (const std::exception&) {
            row.defect_in = row.recovery_distance = row.structural_residual = std::nan("");
            row.status = "FAILED:internal";
        }
        if (settings.timing) {
            row.runtime_ms =
                std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
        }
    };

    const std::size_t workers = std::min(settings.threads, std::max<std::size_t>(total, 1));
    if (workers <= 1) {
        for (std::size_t i = 0; i < total; ++i) {
            run_one(i);
        }
        return result;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < total; i = next++) {
                run_one(i);
            }
        });
    }
    for (auto& t : pool) {
        t.join();
    }
    return result;
}

std::string results_csv(const ExperimentResult& result) {
    std::string out = "experiment,trial,epsilon,defect_in,recovery_distance,structural_residual,runtime_ms,status\n";
    for (const ExperimentRow& r : result.rows) {
        out += result.settings.experiment + "," + std::to_string(r.trial) + "," + csv_number(r.epsilon) + "," +
               csv_number(r.defect_in) + "," + csv_number(r.recovery_distance) + "," +
               csv_number(r.structural_residual) + "," + csv_number(r.runtime_ms) + "," + r.status + "\n";
    }
    return out;
}

std::string manifest_json(const ExperimentResult& result, const std::string& csv_path) {
    const Tolerances& tol = default_tolerances();
    io::Json m;
    m["artifact"] = "perturba";
    m["version"] = kArtifactVersion;
    m["config"] = result.settings.to_map();
    m["tolerances"] = {{"herm_tol", tol.herm_tol},     {"recon_tol", tol.recon_tol},
                       {"rank_tol", tol.rank_tol},     {"struct_tol", tol.struct_tol},
                       {"brute_limit", tol.brute_limit}};
    m["rows"] = result.rows.size();
    m["failed_rows"] = std::count_if(result.rows.begin(), result.rows.end(),
                                     [](const ExperimentRow& r) { return r.status != "OK"; });
    m["results"] = csv_path;
    return m.dump(2) + "\n";
}

std::optional<double> median_recovery(const ExperimentResult& result, double epsilon) {
    std::vector<double> xs;
    for (const ExperimentRow& r : result.rows) {
        if (r.epsilon == epsilon && r.status == "OK") {
            xs.push_back(r.recovery_distance);
        }
    }
    if (xs.empty()) {
        return std::nullopt;
    }
    std::sort(xs.begin(), xs.end());
    const std::size_t h = xs.size() / 2;
    return xs.size() % 2 ? xs[h] : 0.5 * (xs[h - 1] + xs[h]);
}

} // namespace perturba
