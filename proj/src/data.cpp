#include "rfdl/data.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <random>
#include <sstream>

namespace rfdl {

namespace {

using nlohmann::json;

// 53-bit uniform draw in [0, 1).  Hand-rolled so corruption streams do not
// depend on the standard library's distribution internals.
double uniform01(std::mt19937_64& g) {
    return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

bool parse_double(const std::string& tok, double* out) {
    const char* s = tok.c_str();
    char* end = nullptr;
    double v = std::strtod(s, &end);
    while (end && *end == ' ') ++end;
    if (end == s || (end && *end != '\0')) return false;
    *out = v;
    return true;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) {
        size_t a = cell.find_first_not_of(" \t\r");
        size_t b = cell.find_last_not_of(" \t\r");
        out.push_back(a == std::string::npos ? std::string() : cell.substr(a, b - a + 1));
    }
    if (!line.empty() && line.back() == ',') out.push_back(std::string());
    return out;
}

Matrix load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    size_t lineno = 0;
    bool first_content = true;
    size_t width = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells = split_csv_line(line);
        std::vector<double> row(cells.size());
        bool numeric = true;
        for (size_t i = 0; i < cells.size(); ++i)
            if (!parse_double(cells[i], &row[i])) {
                numeric = false;
                break;
            }
        if (!numeric) {
            // A single non-numeric leading line is an optional header.
            if (first_content) {
                first_content = false;
                continue;
            }
            throw IoError(path + ": line " + std::to_string(lineno) + ": non-numeric cell");
        }
        if (rows.empty())
            width = row.size();
        else if (row.size() != width)
            throw IoError(path + ": line " + std::to_string(lineno) + ": expected " +
                          std::to_string(width) + " columns, got " + std::to_string(row.size()));
        first_content = false;
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw IoError(path + ": empty matrix");
    Matrix M(static_cast<Index>(rows.size()), static_cast<Index>(width));
    for (Index i = 0; i < M.rows(); ++i)
        for (Index j = 0; j < M.cols(); ++j) M(i, j) = rows[static_cast<size_t>(i)][static_cast<size_t>(j)];
    return M;
}

constexpr char kRawMagic[4] = {'H', 'Y', 'B', 'M'};

Matrix load_rawf64(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (bytes.empty()) throw IoError(path + ": empty matrix");
    if (bytes.size() < 12 || std::memcmp(bytes.data(), kRawMagic, 4) != 0)
        throw IoError(path + ": not a RAWF64 matrix file");
    std::uint32_t rows = 0, cols = 0;
    std::memcpy(&rows, bytes.data() + 4, 4);
    std::memcpy(&cols, bytes.data() + 8, 4);
    std::uint64_t count = static_cast<std::uint64_t>(rows) * cols;
    if (count > (std::numeric_limits<std::uint64_t>::max() - 12) / 8)
        throw IoError(path + ": shape overflow");
    if (bytes.size() != 12 + 8 * count)
        throw IoError(path + ": truncated or oversized payload");
    Matrix M(static_cast<Index>(rows), static_cast<Index>(cols));
    const char* p = bytes.data() + 12;
    for (Index i = 0; i < M.rows(); ++i)
        for (Index j = 0; j < M.cols(); ++j) {
            double v;
            std::memcpy(&v, p, 8);
            p += 8;
            M(i, j) = v;
        }
    return M;
}

std::string format_csv(const Matrix& M) {
    std::ostringstream out;
    out.precision(17);
    for (Index i = 0; i < M.rows(); ++i) {
        for (Index j = 0; j < M.cols(); ++j) {
            if (j) out << ',';
            out << M(i, j);
        }
        out << '\n';
    }
    return out.str();
}

std::string format_rawf64(const Matrix& M) {
    if (M.rows() > static_cast<Index>(std::numeric_limits<std::uint32_t>::max()) ||
        M.cols() > static_cast<Index>(std::numeric_limits<std::uint32_t>::max()))
        throw IoError("save_matrix: shape overflow");
    std::string bytes(12 + 8 * static_cast<size_t>(M.size()), '\0');
    std::memcpy(bytes.data(), kRawMagic, 4);
    std::uint32_t rows = static_cast<std::uint32_t>(M.rows());
    std::uint32_t cols = static_cast<std::uint32_t>(M.cols());
    std::memcpy(bytes.data() + 4, &rows, 4);
    std::memcpy(bytes.data() + 8, &cols, 4);
    char* p = bytes.data() + 12;
    for (Index i = 0; i < M.rows(); ++i)
        for (Index j = 0; j < M.cols(); ++j) {
            double v = M(i, j);
            std::memcpy(p, &v, 8);
            p += 8;
        }
    return bytes;
}

std::string resolve_relative(const std::string& manifest_path, const std::string& file) {
    std::filesystem::path p(file);
    if (p.is_absolute()) return file;
    return (std::filesystem::path(manifest_path).parent_path() / p).string();
}

}  // namespace

Matrix load_matrix(const std::string& path, MatrixFormat format) {
    return format == MatrixFormat::csv ? load_csv(path) : load_rawf64(path);
}

void save_matrix(const std::string& path, const Matrix& M, MatrixFormat format) {
    atomic_write_text(path, format == MatrixFormat::csv ? format_csv(M) : format_rawf64(M));
}

std::vector<int> load_labels(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::vector<int> labels;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const char* s = line.c_str();
        char* end = nullptr;
        long v = std::strtol(s, &end, 10);
        while (end && *end == ' ') ++end;
        if (end == s || (end && *end != '\0'))
            throw IoError(path + ": line " + std::to_string(lineno) + ": not an integer");
        labels.push_back(static_cast<int>(v));
    }
    if (labels.empty()) throw IoError(path + ": empty labels file");
    return labels;
}

void save_labels(const std::string& path, const std::vector<int>& labels) {
    std::ostringstream out;
    for (int l : labels) out << l << '\n';
    atomic_write_text(path, out.str());
}

DatasetManifest load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw IoError(path + ": " + e.what());
    }
    DatasetManifest m;
    try {
        m.features = doc.at("features").get<std::string>();
        m.labels = doc.at("labels").get<std::string>();
        m.classes = doc.at("classes").get<Index>();
        if (doc.contains("height") || doc.contains("width")) {
            ImageGeometry g;
            g.height = doc.at("height").get<Index>();
            g.width = doc.at("width").get<Index>();
            m.geometry = g;
        }
        if (doc.contains("normalize")) m.normalize = doc.at("normalize").get<std::string>();
    } catch (const json::exception& e) {
        throw IoError(path + ": " + e.what());
    }
    if (m.classes < 1) throw IoError(path + ": classes must be positive");
    if (m.normalize != "none" && m.normalize != "unit_l2")
        throw IoError(path + ": unknown normalize directive '" + m.normalize + "'");
    return m;
}

void save_manifest(const std::string& path, const DatasetManifest& manifest) {
    json doc;
    doc["features"] = manifest.features;
    doc["labels"] = manifest.labels;
    doc["classes"] = manifest.classes;
    if (manifest.geometry) {
        doc["height"] = manifest.geometry->height;
        doc["width"] = manifest.geometry->width;
    }
    doc["normalize"] = manifest.normalize;
    atomic_write_text(path, doc.dump(2) + "\n");
}

Dataset load_dataset(const std::string& manifest_path) {
    DatasetManifest m = load_manifest(manifest_path);
    std::string fpath = resolve_relative(manifest_path, m.features);
    MatrixFormat fmt = fpath.size() >= 4 && fpath.substr(fpath.size() - 4) == ".csv"
                           ? MatrixFormat::csv
                           : MatrixFormat::rawf64;
    Dataset d;
    d.samples.X = load_matrix(fpath, fmt);
    d.labels = load_labels(resolve_relative(manifest_path, m.labels));
    d.classes = m.classes;
    if (static_cast<Index>(d.labels.size()) != d.samples.X.cols())
        throw IoError(manifest_path + ": " + std::to_string(d.labels.size()) + " labels for " +
                      std::to_string(d.samples.X.cols()) + " samples");
    for (size_t i = 0; i < d.labels.size(); ++i)
        if (d.labels[i] < 0 || d.labels[i] >= m.classes)
            throw IoError(manifest_path + ": label " + std::to_string(d.labels[i]) +
                          " outside [0, " + std::to_string(m.classes) + ")");
    if (!all_finite(d.samples.X)) throw IoError(manifest_path + ": non-finite feature entries");
    if (m.geometry) {
        if (m.geometry->height < 1 || m.geometry->width < 1 ||
            m.geometry->height * m.geometry->width != d.samples.X.rows())
            throw IoError(manifest_path + ": geometry does not match the feature dimension");
        d.samples.geometry = m.geometry;
    }
    if (m.normalize == "unit_l2") d.samples.X = unit_l2_normalize(d.samples.X);
    return d;
}

Matrix unit_l2_normalize(const Matrix& X) {
    Matrix out = X;
    for (Index j = 0; j < out.cols(); ++j) {
        double norm = out.col(j).norm();
        if (norm > 0.0) out.col(j) /= norm;
    }
    return out;
}

SplitPlan split_per_class(const std::vector<int>& labels, int f, unsigned seed) {
    if (f < 0) throw std::invalid_argument("split_per_class: negative train count");
    std::map<int, std::vector<Index>> by_class;
    for (size_t i = 0; i < labels.size(); ++i)
        by_class[labels[i]].push_back(static_cast<Index>(i));
    SplitPlan plan;
    plan.per_class_train = f;
    plan.seed = seed;
    std::mt19937_64 rng(seed);
    for (auto& [cls, idx] : by_class) {
        if (idx.size() < static_cast<size_t>(f))
            throw std::invalid_argument("split_per_class: class " + std::to_string(cls) +
                                        " has " + std::to_string(idx.size()) +
                                        " samples, needs " + std::to_string(f));
        // Portable Fisher-Yates: avoids distribution-implementation variance.
        for (size_t k = idx.size() - 1; k > 0; --k)
            std::swap(idx[k], idx[rng() % (k + 1)]);
        plan.train.insert(plan.train.end(), idx.begin(), idx.begin() + f);
        plan.test.insert(plan.test.end(), idx.begin() + f, idx.end());
    }
    std::sort(plan.train.begin(), plan.train.end());
    std::sort(plan.test.begin(), plan.test.end());
    return plan;
}

PcaReduced pca_reduce(const Matrix& X, double energy_fraction) {
    if (!(energy_fraction > 0.0) || energy_fraction > 1.0)
        throw std::invalid_argument("pca_reduce: energy fraction must be in (0, 1]");
    if (X.size() == 0) throw std::invalid_argument("pca_reduce: empty data matrix");
    PcaReduced out;
    out.record.mean = X.rowwise().mean();
    Matrix Xc = X.colwise() - out.record.mean;
    // JacobiSVD for the same reason as svt: BDCSVD misbehaves on matrices
    // with near-duplicate columns, which low-noise class data is full of.
    Eigen::JacobiSVD<Matrix> svd(Xc, Eigen::ComputeThinU);
    const Vector& sv = svd.singularValues();
    double total = sv.squaredNorm();
    Index d = 0;
    double cum = 0.0;
    // Tiny slack so energy 1.0 stops at the numerical rank instead of
    // dragging in defunct trailing directions.
    double target = energy_fraction * total * (1.0 - 1e-12);
    while (d < sv.size() && (cum < target || d == 0)) {
        cum += sv[d] * sv[d];
        ++d;
        if (cum >= target) break;
    }
    if (d == 0) d = 1;  // zero-variance data: keep one (arbitrary) direction
    out.record.basis = svd.matrixU().leftCols(d);
    out.Z = out.record.apply(X);
    return out;
}

Matrix corrupt_pixels(const Matrix& X, double fraction, unsigned seed, CorruptionKind kind) {
    if (!(fraction >= 0.0) || fraction > 1.0)
        throw std::invalid_argument("corrupt_pixels: fraction must be in [0, 1]");
    Matrix out = X;
    if (X.size() == 0) return out;
    const Index n = X.rows();
    const Index m = static_cast<Index>(std::floor(fraction * static_cast<double>(n)));
    if (m == 0) return out;
    const double lo = X.minCoeff(), hi = X.maxCoeff();
    std::vector<Index> idx(static_cast<size_t>(n));
    for (Index j = 0; j < X.cols(); ++j) {
        std::mt19937_64 g(static_cast<std::uint64_t>(seed) ^ static_cast<std::uint64_t>(j));
        for (Index i = 0; i < n; ++i) idx[static_cast<size_t>(i)] = i;
        for (Index k = 0; k < m; ++k) {
            Index t = k + static_cast<Index>(g() % static_cast<std::uint64_t>(n - k));
            std::swap(idx[static_cast<size_t>(k)], idx[static_cast<size_t>(t)]);
            double value = kind == CorruptionKind::uniform_range
                               ? lo + (hi - lo) * uniform01(g)
                               : ((g() & 1u) ? hi : lo);
            out(idx[static_cast<size_t>(k)], j) = value;
        }
    }
    return out;
}

Matrix occlude_block(const SampleMatrix& samples, Index block_side, unsigned seed) {
    if (!samples.geometry)
        throw std::invalid_argument("occlude_block: samples carry no image geometry");
    const Index h = samples.geometry->height, w = samples.geometry->width;
    if (h * w != samples.X.rows())
        throw std::invalid_argument("occlude_block: geometry does not match feature dimension");
    if (block_side < 0 || block_side > std::min(h, w))
        throw std::invalid_argument("occlude_block: block side outside [0, min(height, width)]");
    Matrix out = samples.X;
    if (block_side == 0) return out;
    for (Index j = 0; j < out.cols(); ++j) {
        std::mt19937_64 g(static_cast<std::uint64_t>(seed) ^ static_cast<std::uint64_t>(j));
        Index top = static_cast<Index>(g() % static_cast<std::uint64_t>(h - block_side + 1));
        Index left = static_cast<Index>(g() % static_cast<std::uint64_t>(w - block_side + 1));
        for (Index r = top; r < top + block_side; ++r)
            for (Index c = left; c < left + block_side; ++c) out(r * w + c, j) = 0.0;
    }
    return out;
}

SynthResult synth_classes(Index c, Index n, Index per_class, double separation,
                          double noise_sigma, unsigned seed) {
    if (c < 1 || n < 1 || per_class < 1)
        throw std::invalid_argument("synth_classes: all counts must be positive");
    if (separation < 0.0 || noise_sigma < 0.0)
        throw std::invalid_argument("synth_classes: separation and noise must be nonnegative");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, noise_sigma);
    SynthResult out;
    out.samples.X.resize(n, per_class * c);
    // Mean of class k is (separation/sqrt(2)) * e_{k mod n}: distinct classes
    // sit exactly `separation` apart and the layout is nonnegative.
    const double bump = separation / std::sqrt(2.0);
    for (Index k = 0; k < c; ++k)
        for (Index j = 0; j < per_class; ++j) {
            Index col = k * per_class + j;
            for (Index i = 0; i < n; ++i) {
                double mean = (i == k % n) ? bump : 0.0;
                double v = mean + (noise_sigma > 0.0 ? noise(rng) : 0.0);
                out.samples.X(i, col) = std::max(v, 0.0);
            }
            out.labels.push_back(static_cast<int>(k));
        }
    return out;
}

}  // namespace rfdl
