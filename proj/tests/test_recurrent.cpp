#include <doctest.h>

#include <fstream>
#include <sstream>

#include "docfsl/common.hpp"
#include "docfsl/recurrent.hpp"
#include "docfsl/rng.hpp"
#include "test_helpers.hpp"

using namespace docfsl;
using docfsl::test::TempDir;

namespace {

// Independent straight-line recurrences used as oracles; no shared code with
// the library's step function.
double sig(double v) { return 1.0 / (1.0 + std::exp(-v)); }

Eigen::VectorXd oracle_forward(const RecurrentUnit& ru, const Eigen::MatrixXd& X) {
    const auto& p = ru.params;
    const int m = ru.hidden_dim;
    Eigen::VectorXd h = Eigen::VectorXd::Zero(m);
    Eigen::VectorXd c = Eigen::VectorXd::Zero(m);
    for (int t = 0; t < X.rows(); ++t) {
        Eigen::VectorXd x = X.row(t).transpose();
        if (ru.kind == RuKind::rnn) {
            Eigen::VectorXd a = p.W[0] * x + p.U[0] * h + p.b[0];
            for (int i = 0; i < m; ++i) h[i] = std::tanh(a[i]);
        } else if (ru.kind == RuKind::lstm) {
            Eigen::VectorXd ai = p.W[0] * x + p.U[0] * h + p.b[0];
            Eigen::VectorXd af = p.W[1] * x + p.U[1] * h + p.b[1];
            Eigen::VectorXd ag = p.W[2] * x + p.U[2] * h + p.b[2];
            Eigen::VectorXd ao = p.W[3] * x + p.U[3] * h + p.b[3];
            for (int i = 0; i < m; ++i) {
                c[i] = sig(af[i]) * c[i] + sig(ai[i]) * std::tanh(ag[i]);
                h[i] = sig(ao[i]) * std::tanh(c[i]);
            }
        } else {
            Eigen::VectorXd az = p.W[0] * x + p.U[0] * h + p.b[0];
            Eigen::VectorXd ar = p.W[1] * x + p.U[1] * h + p.b[1];
            Eigen::VectorXd rh(m);
            for (int i = 0; i < m; ++i) rh[i] = sig(ar[i]) * h[i];
            Eigen::VectorXd ac = p.W[2] * x + p.U[2] * rh + p.b[2];
            for (int i = 0; i < m; ++i) {
                double z = sig(az[i]);
                h[i] = (1.0 - z) * h[i] + z * std::tanh(ac[i]);
            }
        }
    }
    return h;
}

Eigen::MatrixXd random_features(int T, int n, uint64_t seed) {
    Rng rng(seed);
    Eigen::MatrixXd X(T, n);
    for (int t = 0; t < T; ++t)
        for (int j = 0; j < n; ++j) X(t, j) = rng.uniform(-1.0, 1.0);
    return X;
}

}  // namespace

TEST_CASE("init_ru shapes, bound and determinism") {
    for (RuKind kind : {RuKind::rnn, RuKind::lstm, RuKind::gru}) {
        RecurrentUnit ru = init_ru(kind, 8, 5, 77);
        int gates = kind == RuKind::rnn ? 1 : (kind == RuKind::lstm ? 4 : 3);
        REQUIRE(static_cast<int>(ru.params.W.size()) == gates);
        double bound = 1.0 / std::sqrt(5.0);
        for (int g = 0; g < gates; ++g) {
            CHECK(ru.params.W[g].rows() == 5);
            CHECK(ru.params.W[g].cols() == 8);
            CHECK(ru.params.U[g].rows() == 5);
            CHECK(ru.params.U[g].cols() == 5);
            CHECK(ru.params.b[g].size() == 5);
            CHECK(ru.params.W[g].cwiseAbs().maxCoeff() <= bound);
            CHECK(ru.params.U[g].cwiseAbs().maxCoeff() <= bound);
            CHECK(ru.params.b[g].cwiseAbs().maxCoeff() <= bound);
        }
        CHECK(ru.parameter_count() == gates * (5 * 8 + 5 * 5 + 5));

        RecurrentUnit again = init_ru(kind, 8, 5, 77);
        CHECK(flatten_params(again.params) == flatten_params(ru.params));
        RecurrentUnit other = init_ru(kind, 8, 5, 78);
        CHECK(flatten_params(other.params) != flatten_params(ru.params));
    }
    CHECK_THROWS_AS(init_ru(RuKind::lstm, 5, 5, 0), DataError);   // m must be < n
    CHECK_THROWS_AS(init_ru(RuKind::lstm, 4, 0, 0), DataError);
}

TEST_CASE("aggregate matches the straight-line oracle for every kind") {
    for (RuKind kind : {RuKind::rnn, RuKind::lstm, RuKind::gru}) {
        for (int T : {1, 3, 17}) {
            RecurrentUnit ru = init_ru(kind, 6, 4, 11 + static_cast<int>(kind));
            FeatureSequence seq;
            seq.features = random_features(T, 6, 500 + T);
            seq.source_id = "doc";
            DocumentEmbedding emb = aggregate(ru, seq);
            Eigen::VectorXd expect = oracle_forward(ru, seq.features);
            CHECK((emb.vector - expect).cwiseAbs().maxCoeff() < 1e-6);
            CHECK(emb.source_id == "doc");

            RuTrace trace;
            Eigen::VectorXd traced = aggregate_traced(ru, seq.features, trace);
            CHECK((traced - emb.vector).cwiseAbs().maxCoeff() == 0.0);
            CHECK(static_cast<int>(trace.h.size()) == T + 1);
            CHECK(trace.h[0].isZero());
        }
    }
}

TEST_CASE("aggregate rejects bad inputs") {
    RecurrentUnit ru = init_ru(RuKind::rnn, 6, 4, 1);
    FeatureSequence empty;
    empty.features = Eigen::MatrixXd(0, 6);
    CHECK_THROWS_AS(aggregate(ru, empty), DataError);
    FeatureSequence wrong;
    wrong.features = Eigen::MatrixXd::Zero(3, 5);
    CHECK_THROWS_AS(aggregate(ru, wrong), DataError);
}

TEST_CASE("batch aggregation equals per-document aggregation") {
    for (RuKind kind : {RuKind::rnn, RuKind::lstm, RuKind::gru}) {
        RecurrentUnit ru = init_ru(kind, 5, 3, 21);
        std::vector<FeatureSequence> batch;
        for (int i = 0; i < 8; ++i) {
            FeatureSequence s;
            int T = 1 + static_cast<int>(Rng(900 + i).bounded(20));
            s.features = random_features(T, 5, 40 + i);
            s.source_id = "d" + std::to_string(i);
            batch.push_back(std::move(s));
        }
        auto joint = aggregate_batch(ru, batch);
        REQUIRE(joint.size() == batch.size());
        for (size_t i = 0; i < batch.size(); ++i) {
            DocumentEmbedding single = aggregate(ru, batch[i]);
            CHECK((joint[i].vector - single.vector).cwiseAbs().maxCoeff() < 1e-12);
            CHECK(joint[i].source_id == batch[i].source_id);
        }
    }
}

TEST_CASE("BPTT gradients match central finite differences") {
    for (RuKind kind : {RuKind::rnn, RuKind::lstm, RuKind::gru}) {
        RecurrentUnit ru = init_ru(kind, 5, 3, 31 + static_cast<int>(kind));
        Eigen::MatrixXd X = random_features(6, 5, 77);
        // Fixed cotangent so the scalar loss is grad_hT . h_T.
        Eigen::VectorXd gT(3);
        gT << 0.7, -1.3, 0.4;

        RuTrace trace;
        aggregate_traced(ru, X, trace);
        Eigen::VectorXd analytic = flatten_params(backward(ru, X, trace, gT));

        Eigen::VectorXd theta = flatten_params(ru.params);
        const double eps = 1e-6;
        for (int i = 0; i < theta.size(); ++i) {
            Eigen::VectorXd tp = theta, tm = theta;
            tp[i] += eps;
            tm[i] -= eps;
            unflatten_params(tp, ru.params);
            double lp = gT.dot(oracle_forward(ru, X));
            unflatten_params(tm, ru.params);
            double lm = gT.dot(oracle_forward(ru, X));
            double numeric = (lp - lm) / (2 * eps);
            double denom = std::max({1.0, std::abs(numeric), std::abs(analytic[i])});
            CHECK(std::abs(analytic[i] - numeric) / denom < 1e-5);
        }
        unflatten_params(theta, ru.params);
    }
}

TEST_CASE("flatten/unflatten round-trips and size checking") {
    RecurrentUnit ru = init_ru(RuKind::gru, 7, 4, 3);
    Eigen::VectorXd flat = flatten_params(ru.params);
    CHECK(flat.size() == ru.parameter_count());
    RuParams copy = zero_like(ru.params);
    unflatten_params(flat, copy);
    CHECK(flatten_params(copy) == flat);

    Eigen::VectorXd wrong = Eigen::VectorXd::Zero(flat.size() + 1);
    CHECK_THROWS_AS(unflatten_params(wrong, copy), DataError);

    RuParams acc = zero_like(ru.params);
    add_scaled(acc, ru.params, -2.0);
    CHECK(flatten_params(acc) == (-2.0 * flat).eval());
}

TEST_CASE("checkpoint round-trip is byte-stable") {
    TempDir dir("ckpt");
    RecurrentUnit ru = init_ru(RuKind::lstm, 9, 4, 12345);
    // Perturb so the file is not just the init
    ru.params.W[0](0, 0) = 0.123456789012345;
    save_checkpoint(dir.file("a.ckpt"), ru);
    RecurrentUnit back = load_checkpoint(dir.file("a.ckpt"));
    CHECK(back.kind == ru.kind);
    CHECK(back.input_dim == 9);
    CHECK(back.hidden_dim == 4);
    CHECK(back.seed == 12345);
    CHECK(flatten_params(back.params) == flatten_params(ru.params));

    save_checkpoint(dir.file("b.ckpt"), back);
    auto slurp = [](const std::string& p) {
        std::ifstream in(p, std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    CHECK(slurp(dir.file("a.ckpt")) == slurp(dir.file("b.ckpt")));
}

TEST_CASE("checkpoint loader rejects bad files") {
    TempDir dir("ckpt_bad");
    CHECK_THROWS_AS(load_checkpoint(dir.file("missing.ckpt")), DataError);

    docfsl::test::write_file(dir.file("junk.ckpt"), "not json at all");
    CHECK_THROWS_AS(load_checkpoint(dir.file("junk.ckpt")), DataError);

    docfsl::test::write_file(
        dir.file("ver.ckpt"),
        R"({"format_version": 99, "kind": "rnn", "input_dim": 4, "hidden_dim": 2, "seed": 0, "params": []})");
    CHECK_THROWS_AS(load_checkpoint(dir.file("ver.ckpt")), DataError);

    docfsl::test::write_file(
        dir.file("count.ckpt"),
        R"({"format_version": 1, "kind": "rnn", "input_dim": 4, "hidden_dim": 2, "seed": 0, "params": [1.0, 2.0]})");
    CHECK_THROWS_AS(load_checkpoint(dir.file("count.ckpt")), DataError);
}

TEST_CASE("kind names round-trip") {
    for (RuKind kind : {RuKind::rnn, RuKind::lstm, RuKind::gru}) {
        CHECK(ru_kind_from_string(to_string(kind)) == kind);
    }
    CHECK_THROWS_AS(ru_kind_from_string("elman"), UsageError);
}
