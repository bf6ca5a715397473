// Shared scalar/matrix aliases and error types used across the library.
#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace rfdl {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Positive per-row (or per-column) weights of a diagonal reweighting matrix.
/// Stored as the diagonal only; helpers below apply it without materializing
/// the full matrix.
struct DiagWeights {
    Vector values;

    Index size() const { return values.size(); }
};

/// Scale row i of M by w.values[i].  Requires w.size() == M.rows().
inline Matrix scale_rows(const DiagWeights& w, const Matrix& M) {
    if (w.size() != M.rows())
        throw std::invalid_argument("scale_rows: weight count does not match row count");
    return w.values.asDiagonal() * M;
}

/// Scale column j of M by w.values[j].  Requires w.size() == M.cols().
inline Matrix scale_cols(const Matrix& M, const DiagWeights& w) {
    if (w.size() != M.cols())
        throw std::invalid_argument("scale_cols: weight count does not match column count");
    return M * w.values.asDiagonal();
}

/// Centering/projection pair recorded by the PCA preprocessing step so the
/// identical reduction can be applied to unseen samples.
struct PcaRecord {
    Vector mean;   ///< per-feature mean of the training data
    Matrix basis;  ///< n x d orthonormal leading subspace

    Matrix apply(const Matrix& X) const { return basis.transpose() * (X.colwise() - mean); }
    Matrix invert(const Matrix& Z) const { return (basis * Z).colwise() + mean; }
};

/// Thrown when solver state leaves the trusted numeric range (non-finite
/// entries or magnitudes beyond the divergence bound).
class DivergenceError : public std::runtime_error {
  public:
    DivergenceError(int iteration, const std::string& what_arg)
        : std::runtime_error(what_arg), iteration_(iteration) {}

    int iteration() const { return iteration_; }

  private:
    int iteration_;
};

/// Thrown by file readers/writers on malformed content or I/O failure.
class IoError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

inline bool all_finite(const Matrix& M) { return M.allFinite(); }

/// Largest absolute entry; 0 for an empty matrix.
inline double max_abs(const Matrix& M) {
    return M.size() == 0 ? 0.0 : M.cwiseAbs().maxCoeff();
}

/// Write text to path via a temporary sibling file and an atomic rename, so
/// readers never observe a partially written file.  Throws IoError.
void atomic_write_text(const std::string& path, const std::string& text);

}  // namespace rfdl
