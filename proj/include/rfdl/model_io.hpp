#pragma once

#include "rfdl/common.hpp"
#include "rfdl/solver.hpp"

#include <string>

namespace rfdl {

/// Provenance written next to a saved model as `<path>.json`.
struct ModelMetadata {
    std::uint64_t seed = 0;
    std::string dataset_hash;       ///< see dataset_fingerprint()
    double train_accuracy = -1.0;   ///< negative means "not measured"
};

/// 64-bit FNV-1a over a matrix's shape and raw little-endian payload,
/// rendered as 16 hex digits.  Stable across runs and platforms with IEEE
/// doubles.
std::string dataset_fingerprint(const Matrix& X);

/// Serialize the model into a versioned binary container (shapes + row-major
/// payloads of P*, D*, optional C*, optional preprocessing record, and the
/// hyperparameters) and write the metadata sidecar.  Both writes are atomic.
void save_model(const std::string& path, const Model& model, const ModelMetadata& meta);

/// Inverse of save_model.  Throws IoError on malformed or version-mismatched
/// containers.  The sidecar is read when present; a missing sidecar leaves
/// `meta` (if given) at defaults.
Model load_model(const std::string& path, ModelMetadata* meta = nullptr);

}  // namespace rfdl
