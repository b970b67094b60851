#include "perturba/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "perturba/error.hpp"

namespace perturba::io {

namespace {

[[noreturn]] void bad(const std::string& what) {
    throw Error(ErrorKind::InvalidConfig, "io", what);
}

const Json& field(const Json& j, const char* key) {
    if (!j.is_object() || !j.contains(key)) {
        bad(std::string("missing field \"") + key + "\"");
    }
    return j.at(key);
}

std::size_t as_count(const Json& j, const char* what) {
    if (!j.is_number_integer() || j.get<long long>() < 0) {
        bad(std::string(what) + " must be a nonnegative integer");
    }
    return j.get<std::size_t>();
}

std::size_t as_index(const Json& j, std::size_t dim) {
    const std::size_t i = as_count(j, "index");
    if (i < 1 || i > dim) {
        bad("index " + std::to_string(i) + " outside 1.." + std::to_string(dim));
    }
    return i - 1;
}

std::string indent(const std::string& text, const std::string& pad) {
    std::string out;
    for (char ch : text) {
        out += ch;
        if (ch == '\n') {
            out += pad;
        }
    }
    return out;
}

// Level patterns on the common space: a ~ b iff the cells of a and b are related.
IncidencePattern cell_pattern(const IncidencePattern& p, const MasaPartition& masa) {
    std::vector<IndexPair> pairs;
    for (std::size_t a = 0; a < masa.dim(); ++a) {
        for (std::size_t b = 0; b < masa.dim(); ++b) {
            if (p.contains(masa.cell_of(a), masa.cell_of(b))) {
                pairs.emplace_back(a, b);
            }
        }
    }
    return IncidencePattern::from_pairs(masa.dim(), pairs);
}

} // namespace

std::string format_double(double x) {
    if (!std::isfinite(x)) {
        throw Error(ErrorKind::InvalidConfig, "io", "refusing to write a non-finite number");
    }
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

Json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorKind::Io, "io", "cannot open " + path);
    }
    try {
        return Json::parse(in);
    } catch (const Json::exception& e) {
        throw Error(ErrorKind::Io, "io", path + ": " + e.what());
    }
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error(ErrorKind::Io, "io", "cannot write " + path);
    }
    out << text;
    if (!out) {
        throw Error(ErrorKind::Io, "io", "write failed for " + path);
    }
}

CMatrix matrix_from_json(const Json& j) {
    const std::size_t rows = as_count(field(j, "rows"), "rows");
    const std::size_t cols = as_count(field(j, "cols"), "cols");
    const Json& data = field(j, "data");
    if (rows == 0 || cols == 0) {
        bad("matrices need at least one row and column");
    }
    if (!data.is_array() || data.size() != rows * cols) {
        bad("matrix data must hold rows*cols = " + std::to_string(rows * cols) + " entries");
    }
    CMatrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (std::size_t k = 0; k < data.size(); ++k) {
        const Json& e = data[k];
        if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number()) {
            bad("matrix entry " + std::to_string(k) + " must be [re, im]");
        }
        const Complex z(e[0].get<double>(), e[1].get<double>());
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) {
            bad("matrix entries must be finite");
        }
        m(static_cast<Eigen::Index>(k / cols), static_cast<Eigen::Index>(k % cols)) = z;
    }
    return m;
}

std::string matrix_to_json(const CMatrix& m) {
    std::string s = "{\"rows\": " + std::to_string(m.rows()) + ", \"cols\": " + std::to_string(m.cols()) +
                    ", \"data\": [";
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (i + j > 0) {
                s += ", ";
            }
            s += "[" + format_double(m(i, j).real()) + ", " + format_double(m(i, j).imag()) + "]";
        }
    }
    return s + "]}";
}

IncidencePattern pattern_from_json(const Json& j) {
    const std::size_t dim = as_count(field(j, "dim"), "dim");
    const Json& pairs = field(j, "pairs");
    if (!pairs.is_array()) {
        bad("pairs must be an array");
    }
    std::vector<IndexPair> out;
    for (const Json& p : pairs) {
        if (!p.is_array() || p.size() != 2) {
            bad("each pair must be [i, j]");
        }
        out.emplace_back(as_index(p[0], dim), as_index(p[1], dim));
    }
    return IncidencePattern::from_pairs(dim, out);
}

std::string pattern_to_json(const IncidencePattern& p) {
    std::string s = "{\"dim\": " + std::to_string(p.dim()) + ", \"pairs\": [";
    bool first = true;
    for (const auto& [i, j] : p.pairs()) {
        s += (first ? "" : ", ") + std::string("[") + std::to_string(i + 1) + ", " + std::to_string(j + 1) + "]";
        first = false;
    }
    return s + "]}";
}

MasaPartition masa_from_json(const Json& j) {
    const Json& cells = field(j, "cells");
    if (!cells.is_array()) {
        bad("cells must be an array");
    }
    std::size_t dim = 0;
    for (const Json& c : cells) {
        if (!c.is_array()) {
            bad("each cell must be an array of indices");
        }
        dim += c.size();
    }
    std::vector<std::vector<std::size_t>> out;
    for (const Json& c : cells) {
        std::vector<std::size_t> cell;
        for (const Json& i : c) {
            cell.push_back(as_index(i, dim));
        }
        out.push_back(std::move(cell));
    }
    return MasaPartition(std::move(out));
}

std::string masa_to_json(const MasaPartition& m) {
    std::string s = "{\"cells\": [";
    for (std::size_t c = 0; c < m.cell_count(); ++c) {
        s += c ? ", [" : "[";
        for (std::size_t k = 0; k < m.cell(c).size(); ++k) {
            s += (k ? ", " : "") + std::to_string(m.cell(c)[k] + 1);
        }
        s += "]";
    }
    return s + "]}";
}

BlockComposition composition_from_json(const Json& j) {
    const Json& sizes = field(j, "sizes");
    if (!sizes.is_array()) {
        bad("sizes must be an array");
    }
    std::vector<std::size_t> out;
    for (const Json& s : sizes) {
        out.push_back(as_count(s, "block size"));
    }
    return BlockComposition(std::move(out));
}

std::string composition_to_json(const BlockComposition& c) {
    std::string s = "{\"sizes\": [";
    for (std::size_t k = 0; k < c.block_count(); ++k) {
        s += (k ? ", " : "") + std::to_string(c.size(k));
    }
    return s + "]}";
}

StarEmbedding embedding_from_json(const Json& j) {
    StarEmbedding e;
    const IncidencePattern pattern = pattern_from_json(field(j, "pattern"));
    const std::size_t ambient = as_count(field(j, "ambient_dim"), "ambient_dim");
    const Json& units = field(j, "units");
    if (!units.is_object()) {
        bad("units must be an object keyed by \"i,j\"");
    }
    e.source = canonical_units(pattern);
    e.images.pattern = pattern;
    e.images.ambient_dim = ambient;
    for (const auto& [i, j2] : pattern.pairs()) {
        const std::string key = std::to_string(i + 1) + "," + std::to_string(j2 + 1);
        if (!units.contains(key)) {
            bad("units lack an image for pair " + key);
        }
        CMatrix m = matrix_from_json(units.at(key));
        if (static_cast<std::size_t>(m.rows()) != ambient || static_cast<std::size_t>(m.cols()) != ambient) {
            bad("unit " + key + " is not " + std::to_string(ambient) + "x" + std::to_string(ambient));
        }
        e.images.units.emplace(IndexPair{i, j2}, std::move(m));
    }
    if (units.size() != pattern.pair_count()) {
        bad("units contain pairs outside the pattern");
    }
    return e;
}

std::string embedding_to_json(const StarEmbedding& e) {
    std::string s = "{\n  \"pattern\": " + pattern_to_json(e.images.pattern) +
                    ",\n  \"ambient_dim\": " + std::to_string(e.images.ambient_dim) + ",\n  \"units\": {";
    bool first = true;
    for (const auto& [key, m] : e.images.units) {
        s += first ? "\n    " : ",\n    ";
        s += "\"" + std::to_string(key.first + 1) + "," + std::to_string(key.second + 1) + "\": " + matrix_to_json(m);
        first = false;
    }
    return s + "\n  }\n}";
}

Tower tower_from_json(const Json& j) {
    const Json& levels = field(j, "levels");
    if (!levels.is_array() || levels.empty()) {
        bad("levels must be a nonempty array");
    }
    Tower t;
    for (const Json& l : levels) {
        TowerLevel level;
        level.embedding = embedding_from_json(field(l, "embedding"));
        level.masa = masa_from_json(field(l, "masa"));
        if (level.masa.cell_count() != level.embedding.images.pattern.dim() ||
            level.masa.dim() != level.embedding.images.ambient_dim) {
            bad("level masa must have one cell per vertex on the ambient space");
        }
        level.ambient_pattern = cell_pattern(level.embedding.images.pattern, level.masa);
        t.push_back(std::move(level));
    }
    return t;
}

std::string tower_to_json(const Tower& t) {
    std::string s = "{\"levels\": [";
    for (std::size_t k = 0; k < t.size(); ++k) {
        s += k ? ",\n  " : "\n  ";
        s += "{\"embedding\": " + indent(embedding_to_json(t[k].embedding), "  ") +
             ",\n   \"masa\": " + masa_to_json(t[k].masa) + "}";
    }
    return s + "\n]}";
}

std::string certificate_to_json(const CorrectionCertificate& c) {
    return "{\n  \"input_defect\": " + format_double(c.input_defect) +
           ",\n  \"correction_distance\": " + format_double(c.correction_distance) +
           ",\n  \"structural_residual\": " + format_double(c.structural_residual) +
           ",\n  \"bound_claimed\": " + (c.bound_claimed ? format_double(*c.bound_claimed) : std::string("null")) +
           "\n}";
}

std::vector<std::size_t> parse_size_list(const std::string& text) {
    std::vector<std::size_t> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        long long v = 0;
        try {
            v = std::stoll(item, &used);
        } catch (const std::exception&) {
            bad("not an integer list: \"" + text + "\"");
        }
        if (v < 0 || item.find_first_not_of(" \t", used) != std::string::npos) {
            bad("not a nonnegative integer list: \"" + text + "\"");
        }
        out.push_back(static_cast<std::size_t>(v));
    }
    return out;
}

std::vector<double> parse_double_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            bad("not a number list: \"" + text + "\"");
        }
        if (!std::isfinite(v) || item.find_first_not_of(" \t", used) != std::string::npos) {
            bad("not a number list: \"" + text + "\"");
        }
        out.push_back(v);
    }
    return out;
}

} // namespace perturba::io
