#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rfdl/model_io.hpp"

#include "test_util.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <string>

using namespace rfdl;
using test::random_matrix;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("rfdl_test_" + tag + "_" + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

Model sample_model(unsigned seed, bool with_c, bool with_pca) {
    std::mt19937_64 rng(seed);
    Model m;
    m.method = with_c ? "djrfdl" : "jrfdl";
    m.P_star = random_matrix(rng, 7, 12);
    m.D_star = random_matrix(rng, 3, 7);
    if (with_c) {
        m.C_star = random_matrix(rng, 7, 4);
        m.classes = 4;
    }
    m.posthoc_classifier = with_c && (seed % 2 == 0);
    m.params.alpha = 1.5;
    m.params.beta = 0.25;
    m.params.gamma = 3e-4;
    m.params.dict_size = 7;
    m.params.rank = 3;
    m.params.mu0 = 2e-6;
    m.params.mu_max = 5e5;
    m.params.eta = 1.09;
    m.params.eps = 1e-6;
    m.params.tau = 2e-6;
    m.params.floor = 1e-9;
    m.params.max_iter = 321;
    m.params.seed = 0x0123456789abcdefull ^ seed;
    m.params.posthoc_beta = 0.75;
    if (with_pca) {
        PcaRecord rec;
        rec.mean = random_matrix(rng, 12, 1).col(0);
        rec.basis = random_matrix(rng, 12, 5);
        m.pca = rec;
    }
    return m;
}

void check_equal(const Matrix& a, const Matrix& b) {
    REQUIRE(a.rows() == b.rows());
    REQUIRE(a.cols() == b.cols());
    for (Index i = 0; i < a.rows(); ++i)
        for (Index j = 0; j < a.cols(); ++j) CHECK(a(i, j) == b(i, j));
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("model round-trip preserves every field bit-for-bit") {
    TempDir tmp("model_roundtrip");
    for (unsigned rep = 0; rep < 20; ++rep) {
        bool with_c = rep % 2 == 0;
        bool with_pca = rep % 3 == 0;
        Model m = sample_model(100 + rep, with_c, with_pca);
        ModelMetadata meta;
        meta.seed = 42 + rep;
        meta.dataset_hash = dataset_fingerprint(m.P_star);
        meta.train_accuracy = 0.5 + 0.01 * rep;

        std::string path = tmp.file("m" + std::to_string(rep) + ".hymd");
        save_model(path, m, meta);

        ModelMetadata got;
        Model r = load_model(path, &got);
        CHECK(r.method == m.method);
        CHECK(r.posthoc_classifier == m.posthoc_classifier);
        CHECK(r.classes == m.classes);
        check_equal(r.P_star, m.P_star);
        check_equal(r.D_star, m.D_star);
        REQUIRE((r.C_star.size() > 0) == with_c);
        if (with_c) check_equal(r.C_star, m.C_star);
        REQUIRE(r.pca.has_value() == with_pca);
        if (with_pca) {
            check_equal(Matrix(r.pca->mean), Matrix(m.pca->mean));
            check_equal(r.pca->basis, m.pca->basis);
        }
        CHECK(r.params.alpha == m.params.alpha);
        CHECK(r.params.beta == m.params.beta);
        CHECK(r.params.gamma == m.params.gamma);
        CHECK(r.params.dict_size == m.params.dict_size);
        CHECK(r.params.rank == m.params.rank);
        CHECK(r.params.mu0 == m.params.mu0);
        CHECK(r.params.mu_max == m.params.mu_max);
        CHECK(r.params.eta == m.params.eta);
        CHECK(r.params.eps == m.params.eps);
        CHECK(r.params.tau == m.params.tau);
        CHECK(r.params.floor == m.params.floor);
        CHECK(r.params.max_iter == m.params.max_iter);
        CHECK(r.params.seed == m.params.seed);
        CHECK(r.params.posthoc_beta == m.params.posthoc_beta);
        CHECK(got.seed == meta.seed);
        CHECK(got.dataset_hash == meta.dataset_hash);
        CHECK(got.train_accuracy == doctest::Approx(meta.train_accuracy).epsilon(1e-15));
    }
}

TEST_CASE("save-load-save produces byte-identical containers") {
    TempDir tmp("model_stable");
    Model m = sample_model(7, true, true);
    ModelMetadata meta;
    meta.seed = 99;
    meta.dataset_hash = "00ff00ff00ff00ff";
    meta.train_accuracy = 0.875;

    std::string a = tmp.file("a.hymd");
    std::string b = tmp.file("b.hymd");
    save_model(a, m, meta);
    ModelMetadata got;
    Model r = load_model(a, &got);
    save_model(b, r, got);
    CHECK(slurp(a) == slurp(b));
    CHECK(slurp(a + ".json") == slurp(b + ".json"));
}

TEST_CASE("malformed containers are rejected with named errors") {
    TempDir tmp("model_bad");

    SUBCASE("missing file") {
        CHECK_THROWS_AS(load_model(tmp.file("nope.hymd")), IoError);
    }
    SUBCASE("wrong magic") {
        std::string p = tmp.file("magic.hymd");
        atomic_write_text(p, "XXXX\x01\x00\x00\x00rest");
        CHECK_THROWS_WITH_AS(load_model(p), doctest::Contains("not a model container"),
                             IoError);
    }
    SUBCASE("unsupported version") {
        std::string p = tmp.file("ver.hymd");
        std::string bytes = "HYMD";
        std::uint32_t v = 9;
        bytes.append(reinterpret_cast<const char*>(&v), 4);
        atomic_write_text(p, bytes);
        CHECK_THROWS_WITH_AS(load_model(p), doctest::Contains("version"), IoError);
    }
    SUBCASE("truncated payload") {
        Model m = sample_model(11, true, false);
        std::string full = tmp.file("full.hymd");
        save_model(full, m, ModelMetadata{});
        std::string bytes = slurp(full);
        for (size_t cut : {bytes.size() - 1, bytes.size() / 2, size_t{12}}) {
            std::string p = tmp.file("cut" + std::to_string(cut) + ".hymd");
            atomic_write_text(p, bytes.substr(0, cut));
            CHECK_THROWS_AS(load_model(p), IoError);
        }
    }
    SUBCASE("trailing bytes") {
        Model m = sample_model(13, false, false);
        std::string p = tmp.file("trail.hymd");
        save_model(p, m, ModelMetadata{});
        atomic_write_text(p, slurp(p) + "junk");
        CHECK_THROWS_WITH_AS(load_model(p), doctest::Contains("trailing"), IoError);
    }
    SUBCASE("corrupt sidecar") {
        Model m = sample_model(17, false, false);
        std::string p = tmp.file("side.hymd");
        save_model(p, m, ModelMetadata{});
        atomic_write_text(p + ".json", "{not json");
        ModelMetadata meta;
        CHECK_THROWS_AS(load_model(p, &meta), IoError);
    }
}

TEST_CASE("missing sidecar leaves metadata at defaults") {
    TempDir tmp("model_noside");
    Model m = sample_model(23, true, false);
    std::string p = tmp.file("m.hymd");
    save_model(p, m, ModelMetadata{});
    fs::remove(p + ".json");

    ModelMetadata meta;
    meta.seed = 777;  // should be reset, not left over
    meta.dataset_hash = "stale";
    meta.train_accuracy = 0.1;
    Model r = load_model(p, &meta);
    CHECK(r.method == m.method);
    CHECK(meta.seed == 0);
    CHECK(meta.dataset_hash.empty());
    CHECK(meta.train_accuracy == -1.0);

    // And loading without asking for metadata works too.
    Model r2 = load_model(p);
    check_equal(r2.P_star, r.P_star);
}

TEST_CASE("dataset fingerprints separate distinct matrices and stay stable") {
    std::mt19937_64 rng(555);
    Matrix A = random_matrix(rng, 6, 9);

    std::string fp = dataset_fingerprint(A);
    CHECK(fp.size() == 16);
    CHECK(fp.find_first_not_of("0123456789abcdef") == std::string::npos);
    CHECK(dataset_fingerprint(A) == fp);  // deterministic

    Matrix B = A;
    B(3, 4) += 1e-12;  // any bit flip must change the digest
    CHECK(dataset_fingerprint(B) != fp);

    Matrix At = A.transpose();  // same payload, different shape
    CHECK(dataset_fingerprint(At) != fp);

    // 100 random matrices: no collisions among themselves or with A.
    std::set<std::string> seen{fp};
    for (int rep = 0; rep < 100; ++rep) {
        Matrix M = random_matrix(rng, 1 + rep % 7, 1 + rep % 5);
        std::string f = dataset_fingerprint(M);
        CHECK(seen.count(f) == 0);
        seen.insert(f);
    }
}
