#include "rfdl/model_io.hpp"

#include <json.hpp>

#include <cstring>
#include <fstream>
#include <sstream>

namespace rfdl {

namespace {

using nlohmann::json;

constexpr char kModelMagic[4] = {'H', 'Y', 'M', 'D'};
constexpr std::uint32_t kModelVersion = 1;

void put_bytes(std::string& out, const void* p, size_t n) {
    out.append(static_cast<const char*>(p), n);
}

template <typename T>
void put(std::string& out, T v) {
    put_bytes(out, &v, sizeof(T));
}

void put_string(std::string& out, const std::string& s) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
    out.append(s);
}

void put_matrix(std::string& out, const Matrix& M) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(M.rows()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(M.cols()));
    for (Index i = 0; i < M.rows(); ++i)
        for (Index j = 0; j < M.cols(); ++j) put<double>(out, M(i, j));
}

struct Reader {
    const std::string& bytes;
    size_t pos = 0;
    const std::string& path;

    void need(size_t n) {
        if (pos + n > bytes.size()) throw IoError(path + ": truncated model container");
    }
    template <typename T>
    T get() {
        need(sizeof(T));
        T v;
        std::memcpy(&v, bytes.data() + pos, sizeof(T));
        pos += sizeof(T);
        return v;
    }
    std::string get_string() {
        std::uint32_t n = get<std::uint32_t>();
        need(n);
        std::string s = bytes.substr(pos, n);
        pos += n;
        return s;
    }
    Matrix get_matrix() {
        std::uint32_t r = get<std::uint32_t>();
        std::uint32_t c = get<std::uint32_t>();
        std::uint64_t count = static_cast<std::uint64_t>(r) * c;
        if (count > bytes.size() / 8 + 1) throw IoError(path + ": shape overflow");
        Matrix M(static_cast<Index>(r), static_cast<Index>(c));
        for (Index i = 0; i < M.rows(); ++i)
            for (Index j = 0; j < M.cols(); ++j) M(i, j) = get<double>();
        return M;
    }
};

}  // namespace

std::string dataset_fingerprint(const Matrix& X) {
    std::uint64_t h = 1469598103934665603ull;  // FNV offset basis
    auto mix = [&h](const void* p, size_t n) {
        const unsigned char* b = static_cast<const unsigned char*>(p);
        for (size_t i = 0; i < n; ++i) {
            h ^= b[i];
            h *= 1099511628211ull;  // FNV prime
        }
    };
    std::uint64_t rows = static_cast<std::uint64_t>(X.rows());
    std::uint64_t cols = static_cast<std::uint64_t>(X.cols());
    mix(&rows, 8);
    mix(&cols, 8);
    for (Index i = 0; i < X.rows(); ++i)
        for (Index j = 0; j < X.cols(); ++j) {
            double v = X(i, j);
            mix(&v, 8);
        }
    std::ostringstream out;
    out << std::hex;
    out.width(16);
    out.fill('0');
    out << h;
    return out.str();
}

void save_model(const std::string& path, const Model& model, const ModelMetadata& meta) {
    std::string out;
    put_bytes(out, kModelMagic, 4);
    put<std::uint32_t>(out, kModelVersion);
    put_string(out, model.method);
    put<std::uint8_t>(out, model.posthoc_classifier ? 1 : 0);
    put<std::uint8_t>(out, model.C_star.size() > 0 ? 1 : 0);
    put<std::uint8_t>(out, model.pca ? 1 : 0);
    put<std::uint8_t>(out, 0);
    put<std::int64_t>(out, static_cast<std::int64_t>(model.classes));

    const HyperParams& p = model.params;
    for (double v : {p.alpha, p.beta, p.gamma, p.mu0, p.mu_max, p.eta, p.eps, p.tau, p.floor,
                     p.posthoc_beta})
        put<double>(out, v);
    put<std::int64_t>(out, static_cast<std::int64_t>(p.dict_size));
    put<std::int64_t>(out, static_cast<std::int64_t>(p.rank));
    put<std::int32_t>(out, p.max_iter);
    put<std::uint64_t>(out, p.seed);

    put_matrix(out, model.P_star);
    put_matrix(out, model.D_star);
    if (model.C_star.size() > 0) put_matrix(out, model.C_star);
    if (model.pca) {
        put_matrix(out, Matrix(model.pca->mean));
        put_matrix(out, model.pca->basis);
    }
    atomic_write_text(path, out);

    json side;
    side["seed"] = meta.seed;
    side["dataset_hash"] = meta.dataset_hash;
    side["train_accuracy"] = meta.train_accuracy;
    side["method"] = model.method;
    atomic_write_text(path + ".json", side.dump(2) + "\n");
}

Model load_model(const std::string& path, ModelMetadata* meta) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (bytes.size() < 8 || std::memcmp(bytes.data(), kModelMagic, 4) != 0)
        throw IoError(path + ": not a model container");
    Reader rd{bytes, 4, path};
    std::uint32_t version = rd.get<std::uint32_t>();
    if (version != kModelVersion)
        throw IoError(path + ": unsupported container version " + std::to_string(version));

    Model m;
    m.method = rd.get_string();
    bool posthoc = rd.get<std::uint8_t>() != 0;
    bool has_c = rd.get<std::uint8_t>() != 0;
    bool has_pca = rd.get<std::uint8_t>() != 0;
    rd.get<std::uint8_t>();
    m.posthoc_classifier = posthoc;
    m.classes = static_cast<Index>(rd.get<std::int64_t>());

    HyperParams& p = m.params;
    p.alpha = rd.get<double>();
    p.beta = rd.get<double>();
    p.gamma = rd.get<double>();
    p.mu0 = rd.get<double>();
    p.mu_max = rd.get<double>();
    p.eta = rd.get<double>();
    p.eps = rd.get<double>();
    p.tau = rd.get<double>();
    p.floor = rd.get<double>();
    p.posthoc_beta = rd.get<double>();
    p.dict_size = static_cast<Index>(rd.get<std::int64_t>());
    p.rank = static_cast<Index>(rd.get<std::int64_t>());
    p.max_iter = rd.get<std::int32_t>();
    p.seed = rd.get<std::uint64_t>();

    m.P_star = rd.get_matrix();
    m.D_star = rd.get_matrix();
    if (has_c) m.C_star = rd.get_matrix();
    if (has_pca) {
        PcaRecord rec;
        rec.mean = rd.get_matrix().col(0);
        rec.basis = rd.get_matrix();
        m.pca = rec;
    }
    if (rd.pos != bytes.size()) throw IoError(path + ": trailing bytes in model container");

    if (meta) {
        *meta = ModelMetadata{};
        std::ifstream side(path + ".json");
        if (side) {
            try {
                json doc;
                side >> doc;
                meta->seed = doc.value("seed", std::uint64_t{0});
                meta->dataset_hash = doc.value("dataset_hash", std::string());
                meta->train_accuracy = doc.value("train_accuracy", -1.0);
            } catch (const json::exception& e) {
                throw IoError(path + ".json: " + e.what());
            }
        }
    }
    return m;
}

}  // namespace rfdl
