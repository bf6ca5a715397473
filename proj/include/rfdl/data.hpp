#pragma once

#include "rfdl/common.hpp"

#include <optional>
#include <string>
#include <vector>

namespace rfdl {

/// Image shape of a flattened feature vector: pixel (r, c) lives at feature
/// index r*width + c (row-major).
struct ImageGeometry {
    Index height = 0;
    Index width = 0;
};

/// Feature matrix with one column per sample, optionally carrying the image
/// shape of each column.
struct SampleMatrix {
    Matrix X;
    std::optional<ImageGeometry> geometry;
};

enum class MatrixFormat {
    csv,     ///< numeric rows, comma separated, optional single header line
    rawf64,  ///< magic "HYBM", u32 rows, u32 cols, little-endian f64 row-major
};

/// Read a matrix from disk.  Throws IoError on malformed content (CSV errors
/// name the offending line) and on shape overflow.
Matrix load_matrix(const std::string& path, MatrixFormat format);

/// Write a matrix.  RAWF64 round-trips bit-exactly; CSV keeps 17 significant
/// digits.  Both go through an atomic temp-file rename.
void save_matrix(const std::string& path, const Matrix& M, MatrixFormat format);

/// Labels file: one 0-based integer per line.
std::vector<int> load_labels(const std::string& path);
void save_labels(const std::string& path, const std::vector<int>& labels);

/// On-disk description of a dataset: where the features/labels live and how
/// to interpret them.
struct DatasetManifest {
    std::string features;  ///< matrix file path, relative to the manifest
    std::string labels;    ///< labels file path, relative to the manifest
    Index classes = 0;
    std::optional<ImageGeometry> geometry;
    std::string normalize = "none";  ///< "none" or "unit_l2"
};

DatasetManifest load_manifest(const std::string& path);
void save_manifest(const std::string& path, const DatasetManifest& manifest);

/// A manifest's features, labels, and class count, loaded and validated
/// (matching sample counts, labels in range, geometry consistent) with the
/// normalization directive already applied.
struct Dataset {
    SampleMatrix samples;
    std::vector<int> labels;
    Index classes = 0;
};

Dataset load_dataset(const std::string& manifest_path);

/// Scale each column to unit Euclidean length; zero columns stay zero.
Matrix unit_l2_normalize(const Matrix& X);

/// Seeded per-class train/test split: exactly `per_class_train` uniformly
/// chosen training indices from every class, the rest as test.
struct SplitPlan {
    int per_class_train = 0;
    unsigned seed = 0;
    std::vector<Index> train;  ///< ascending sample indices
    std::vector<Index> test;   ///< ascending sample indices
};

/// Throws when any class has fewer than f members.
SplitPlan split_per_class(const std::vector<int>& labels, int f, unsigned seed);

/// PCA-reduced data plus the record needed to map unseen samples the same way.
struct PcaReduced {
    Matrix Z;          ///< d x N reduced features, Z = basis^T (X - mean)
    PcaRecord record;  ///< mean and n x d orthonormal basis
};

/// Center columns and keep the smallest leading singular subspace holding at
/// least `energy_fraction` of the squared singular mass.
PcaReduced pca_reduce(const Matrix& X, double energy_fraction);

enum class CorruptionKind {
    uniform_range,  ///< replacement values uniform over [min(X), max(X)]
    salt_pepper,    ///< replacement values are min(X) or max(X), fair coin
};

/// Replace floor(fraction*n) uniformly chosen entries of every sample.  The
/// per-sample generator is seeded with (seed XOR sample index), so parallel
/// per-sample application reproduces the serial result.
Matrix corrupt_pixels(const Matrix& X, double fraction, unsigned seed,
                      CorruptionKind kind = CorruptionKind::uniform_range);

/// Zero a seeded random block_side x block_side region of every sample's
/// image.  Requires geometry; same per-sample seeding rule as corrupt_pixels.
Matrix occlude_block(const SampleMatrix& samples, Index block_side, unsigned seed);

/// Synthetic c-class dataset: class means sit on distinct coordinate axes at
/// distance `separation` from one another (a nonnegative simplex layout),
/// plus Gaussian noise, clipped at zero entrywise.
struct SynthResult {
    SampleMatrix samples;
    std::vector<int> labels;
};

SynthResult synth_classes(Index c, Index n, Index per_class, double separation,
                          double noise_sigma, unsigned seed);

}  // namespace rfdl
