#pragma once

#include <string>

#include <json.hpp>

#include "perturba/perturb.hpp"
#include "perturba/tower.hpp"

namespace perturba::io {

using Json = nlohmann::json;

/// "%.17g"; throws InvalidConfig for NaN or infinity.
std::string format_double(double x);

Json read_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

// Matrices: {"rows": n, "cols": m, "data": [[re, im], ...]}, row-major.
CMatrix matrix_from_json(const Json& j);
std::string matrix_to_json(const CMatrix& m);

// Indices are 1-based in every file format.
IncidencePattern pattern_from_json(const Json& j);
std::string pattern_to_json(const IncidencePattern& p);

MasaPartition masa_from_json(const Json& j);
std::string masa_to_json(const MasaPartition& m);

BlockComposition composition_from_json(const Json& j);
std::string composition_to_json(const BlockComposition& c);

/// {"pattern": ..., "ambient_dim": n, "units": {"i,j": matrix, ...}}
StarEmbedding embedding_from_json(const Json& j);
std::string embedding_to_json(const StarEmbedding& e);

/// {"levels": [{"embedding": ..., "masa": ...}, ...]}
Tower tower_from_json(const Json& j);
std::string tower_to_json(const Tower& t);

/// {"input_defect", "correction_distance", "structural_residual", "bound_claimed" | null}
std::string certificate_to_json(const CorrectionCertificate& c);

/// "2,2,2" -> {2, 2, 2}
std::vector<std::size_t> parse_size_list(const std::string& text);
std::vector<double> parse_double_list(const std::string& text);

} // namespace perturba::io
