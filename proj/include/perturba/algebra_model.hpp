#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "perturba/numkernel.hpp"

namespace perturba {

using IndexPair = std::pair<std::size_t, std::size_t>;

/// Ordered block sizes (n_1, ..., n_r) decomposing the identity of M_N.
///
/// Indices are 0-based throughout the library; the JSON formats are 1-based.
class BlockComposition {
public:
    explicit BlockComposition(std::vector<std::size_t> sizes);

    const std::vector<std::size_t>& sizes() const { return sizes_; }
    std::size_t block_count() const { return sizes_.size(); }
    std::size_t total() const { return offsets_.back(); }
    std::size_t offset(std::size_t block) const { return offsets_[block]; }
    std::size_t size(std::size_t block) const { return sizes_[block]; }
    std::size_t block_of(std::size_t index) const;

    /// P_k: diagonal projection onto the first k blocks, k = 1..r.
    CMatrix nest_projection(std::size_t k) const;
    /// I_{n_k}: diagonal projection onto block k (0-based).
    CMatrix block_projection(std::size_t block) const;

    /// Every block size multiplied by m.
    BlockComposition ampliate(std::size_t m) const;

    bool operator==(const BlockComposition& other) const { return sizes_ == other.sizes_; }

private:
    std::vector<std::size_t> sizes_;
    std::vector<std::size_t> offsets_;
};

/// Reflexive, transitive 0/1 relation on {0..N-1}; the support of a digraph algebra.
class IncidencePattern {
public:
    /// Diagonal-only pattern.
    explicit IncidencePattern(std::size_t dim);

    /// Adds the diagonal, then validates transitivity; throws InvalidConfig otherwise.
    static IncidencePattern from_pairs(std::size_t dim, const std::vector<IndexPair>& pairs);
    /// Reflexive-transitive closure of the given pairs.
    static IncidencePattern closure_of(std::size_t dim, const std::vector<IndexPair>& pairs);
    static IncidencePattern full(std::size_t dim);

    std::size_t dim() const { return dim_; }
    bool contains(std::size_t i, std::size_t j) const { return rel_[i * dim_ + j] != 0; }
    std::vector<IndexPair> pairs() const;  // lexicographic order
    std::size_t pair_count() const;

    bool is_reflexive() const;
    bool is_transitive() const;

    /// Pairs (i, j) with (j, i) also present: the pattern of A cap A*.
    IncidencePattern selfadjoint_part() const;
    /// Pattern tensor full M_m, with vertex i copy a at index i*m + a.
    IncidencePattern ampliate(std::size_t m) const;
    /// The composition when this is a nest pattern, std::nullopt otherwise.
    std::optional<BlockComposition> as_nest() const;

    /// Zero every entry outside the pattern.
    CMatrix truncate(const CMatrix& x) const;

    bool operator==(const IncidencePattern& other) const { return dim_ == other.dim_ && rel_ == other.rel_; }

private:
    void set(std::size_t i, std::size_t j) { rel_[i * dim_ + j] = 1; }

    std::size_t dim_;
    std::vector<char> rel_;
};

/// Partition of {0..N-1}; each cell supports one minimal projection of a sub-masa.
class MasaPartition {
public:
    explicit MasaPartition(std::vector<std::vector<std::size_t>> cells);

    static MasaPartition full_diagonal(std::size_t dim);
    static MasaPartition single_cell(std::size_t dim);
    /// Cells {i*m, ..., i*m + m-1} for i < vertices.
    static MasaPartition ampliated(std::size_t vertices, std::size_t m);

    std::size_t dim() const { return cell_of_.size(); }
    std::size_t cell_count() const { return cells_.size(); }
    const std::vector<std::vector<std::size_t>>& cells() const { return cells_; }
    const std::vector<std::size_t>& cell(std::size_t c) const { return cells_[c]; }
    std::size_t cell_of(std::size_t index) const { return cell_of_[index]; }

    CMatrix cell_projection(std::size_t c) const;

    bool operator==(const MasaPartition& other) const { return cells_ == other.cells_; }

private:
    std::vector<std::vector<std::size_t>> cells_;
    std::vector<std::size_t> cell_of_;
};

/// Family {f_ij} indexed by a pattern, acting on C^ambient_dim.
struct MatrixUnitSystem {
    IncidencePattern pattern{0};
    std::size_t ambient_dim = 0;
    std::map<IndexPair, CMatrix> units;

    const CMatrix& unit(std::size_t i, std::size_t j) const;
};

/// Star-extendible map, determined by where it sends the canonical matrix units.
struct StarEmbedding {
    MatrixUnitSystem source;  // canonical units of the abstract algebra
    MatrixUnitSystem images;  // their images in M_n
};

struct DefectReport {
    double pisometry_defect = 0.0;
    double normalizer_defect = 0.0;
    double containment_defect = 0.0;
    bool containment_exact = true;  // false when the digraph distance is a truncation upper bound
    std::vector<std::pair<std::string, double>> per_generator;
};

struct MasaDistance {
    double estimate = 0.0;          // ||w - E(w)||
    double commutator_bound = 0.0;  // max ||wp - pw|| over enumerated masa projections
    bool exhaustive = true;         // false: single-cell projections only, a lower bound
};

struct ContainmentDefect {
    double value = 0.0;
    bool exact = true;
};

// ---------------------------------------------------------------------------

IncidencePattern nest_pattern(const BlockComposition& comp);

/// dist(x, block upper triangular matrices) = max_k ||(I - P_k) x P_k||.
double arveson_distance(const CMatrix& x, const BlockComposition& comp);

/// Sum over cells of p_cell b p_cell.
CMatrix expectation(const CMatrix& b, const MasaPartition& masa);

/// Block-diagonal compression with respect to a composition.
CMatrix block_diagonal_part(const CMatrix& b, const BlockComposition& comp);

MasaDistance masa_distance(const CMatrix& w, const MasaPartition& masa, const Tolerances& tol = default_tolerances());

/// ||w - E(w)|| only; the cheap half of masa_distance.
double masa_distance_estimate(const CMatrix& w, const MasaPartition& masa);

/// Generator-level containment of gens' units in the span of a target pattern.
ContainmentDefect containment_defect(const MatrixUnitSystem& gens, const IncidencePattern& target);

/// Max over minimal masa projections e of the distance of v e v* and v* e v from the masa.
double normalizer_defect(const CMatrix& v, const MasaPartition& masa);

double matrix_unit_residual(const MatrixUnitSystem& sys);

/// Largest |x_ij| over entries outside the pattern.
double support_violation(const CMatrix& x, const IncidencePattern& pattern);

DefectReport measure_defects(const MatrixUnitSystem& gens, const IncidencePattern& target, const MasaPartition& masa);

/// Canonical units e_ij (x) I_m on C^{dim*m}.
MatrixUnitSystem ampliated_units(const IncidencePattern& pattern, std::size_t multiplicity);
MatrixUnitSystem canonical_units(const IncidencePattern& pattern);

/// Same system conjugated by a unitary: u f_ij u*.
MatrixUnitSystem conjugate(const MatrixUnitSystem& sys, const CMatrix& u);

StarEmbedding random_near_identity_embedding(const IncidencePattern& pattern, std::size_t multiplicity,
                                             double epsilon, std::uint64_t seed);

/// max_ij ||f_ij - g_ij|| over the pairs of a (both systems share the pattern).
double unit_distance(const MatrixUnitSystem& a, const MatrixUnitSystem& b);

} // namespace perturba
