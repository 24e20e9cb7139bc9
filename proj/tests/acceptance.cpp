// Acceptance gate: one pass/fail line per criterion, non-zero exit when any
// criterion fails. Built as its own binary so it can run standalone.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <sys/wait.h>

#include "docfsl/fsl.hpp"
#include "docfsl/metrics.hpp"
#include "docfsl/patching.hpp"
#include "docfsl/recurrent.hpp"
#include "docfsl/synthetic.hpp"
#include "docfsl/training.hpp"
#include "test_helpers.hpp"

namespace fs = std::filesystem;
using namespace docfsl;
using docfsl::test::TempDir;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

Eigen::MatrixXd random_features(int T, int n, Rng& rng) {
    Eigen::MatrixXd X(T, n);
    for (int t = 0; t < T; ++t)
        for (int j = 0; j < n; ++j) X(t, j) = rng.uniform(-1.0, 1.0);
    return X;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int run_cli(const std::string& args, const std::string& log) {
    std::string cmd = std::string(DOCFSL_BIN) + " " + args + " > " + log + " 2>&1";
    int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

// 1. Reference grid geometry: 7 x 10 patches for a 1047x1564 document at
//    W = 299, planned in well under a millisecond.
bool check_grid_geometry() {
    auto t0 = Clock::now();
    GridPlan plan;
    const int iters = 1000;
    for (int i = 0; i < iters; ++i) plan = plan_grid(1047, 1564, 299);
    double per_call_ms = seconds_since(t0) * 1000.0 / iters;
    return plan.row_starts.size() == 7 && plan.col_starts.size() == 10 &&
           plan.patch_count() == 70 && plan.row_starts.front() == 0 &&
           plan.row_starts.back() == 748 && plan.col_starts.back() == 1265 &&
           per_call_ms < 1.0;
}

// 2. Prototype classification equals a brute-force nearest-class-mean oracle
//    on 1000 random episodes.
bool check_prototype_oracle() {
    Rng rng(20240601);
    for (int trial = 0; trial < 1000; ++trial) {
        int dim = 1 + static_cast<int>(rng.bounded(8));
        int k = 1 + static_cast<int>(rng.bounded(6));
        std::vector<std::pair<Eigen::VectorXd, Label>> support;
        for (int i = 0; i < 2 * k; ++i) {
            Eigen::VectorXd v(dim);
            for (int d = 0; d < dim; ++d) v[d] = rng.uniform(-4, 4);
            support.emplace_back(v, i < k ? Label::genuine : Label::fake);
        }
        std::vector<Eigen::VectorXd> queries;
        for (int i = 0; i < 5; ++i) {
            Eigen::VectorXd v(dim);
            for (int d = 0; d < dim; ++d) v[d] = rng.uniform(-4, 4);
            queries.push_back(v);
        }
        EpisodeResult r =
            classify_queries(compute_prototypes(support), queries, FslMode::unconditional);

        Eigen::VectorXd mg = Eigen::VectorXd::Zero(dim), mf = Eigen::VectorXd::Zero(dim);
        for (int i = 0; i < k; ++i) mg += support[i].first;
        for (int i = k; i < 2 * k; ++i) mf += support[i].first;
        mg /= k;
        mf /= k;
        for (size_t j = 0; j < queries.size(); ++j) {
            double dg = 0, df = 0;
            for (int d = 0; d < dim; ++d) {
                dg += (queries[j][d] - mg[d]) * (queries[j][d] - mg[d]);
                df += (queries[j][d] - mf[d]) * (queries[j][d] - mf[d]);
            }
            if (std::abs(r.distances[j].first - dg) > 1e-9) return false;
            if (std::abs(r.distances[j].second - df) > 1e-9) return false;
            if (r.predictions[j] != (dg <= df ? Label::genuine : Label::fake)) return false;
            double pg = 1.0 / (1.0 + std::exp(dg - df));
            if (std::abs(r.probabilities[j].first - pg) > 1e-9) return false;
        }
    }
    return true;
}

// 3. Rank-based AUC equals the O(n^2) pairwise oracle on 1000 tied score sets.
bool check_auc_oracle() {
    Rng rng(555);
    for (int trial = 0; trial < 1000; ++trial) {
        int n = 2 + static_cast<int>(rng.bounded(80));
        std::vector<double> scores;
        std::vector<Label> truths;
        int n_f = 0;
        for (int i = 0; i < n; ++i) {
            scores.push_back(std::floor(rng.uniform() * 6) / 6.0);
            bool fake = rng.bounded(2) == 1;
            if (fake) ++n_f;
            truths.push_back(fake ? Label::fake : Label::genuine);
        }
        if (n_f == 0) truths[0] = Label::fake;
        if (n_f == n) truths[0] = Label::genuine;

        double num = 0;
        long pairs = 0;
        for (int i = 0; i < n; ++i) {
            if (truths[i] != Label::fake) continue;
            for (int j = 0; j < n; ++j) {
                if (truths[j] != Label::genuine) continue;
                ++pairs;
                if (scores[i] > scores[j]) num += 1.0;
                else if (scores[i] == scores[j]) num += 0.5;
            }
        }
        if (std::abs(auc(scores, truths) - num / pairs) > 1e-9) return false;
    }
    return true;
}

// 4. BPTT through the full episode loss matches central finite differences
//    for all three recurrent unit kinds (n=4, m=3, T=5).
bool check_gradients() {
    const int n = 4, m = 3, T = 5, k = 2, q = 2;
    for (RuKind kind : {RuKind::rnn, RuKind::lstm, RuKind::gru}) {
        RecurrentUnit ru = init_ru(kind, n, m, 17 + static_cast<int>(kind));
        Rng rng(313 + static_cast<int>(kind));
        std::vector<Eigen::MatrixXd> feats;
        std::vector<Label> labels;
        for (int i = 0; i < 2 * (k + q); ++i) {
            feats.push_back(random_features(T, n, rng));
            labels.push_back(i % 2 == 0 ? Label::genuine : Label::fake);
        }

        auto episode_loss_now = [&]() {
            std::vector<std::pair<Eigen::VectorXd, Label>> support, query;
            for (int i = 0; i < 2 * (k + q); ++i) {
                RuTrace trace;
                Eigen::VectorXd h = aggregate_traced(ru, feats[i], trace);
                (i < 2 * k ? support : query).emplace_back(h, labels[i]);
            }
            std::vector<Eigen::VectorXd> gs, gq;
            return prototype_loss_and_grads(support, query, gs, gq);
        };

        // analytic gradient via BPTT
        std::vector<std::pair<Eigen::VectorXd, Label>> support, query;
        std::vector<RuTrace> traces(2 * (k + q));
        for (int i = 0; i < 2 * (k + q); ++i) {
            Eigen::VectorXd h = aggregate_traced(ru, feats[i], traces[i]);
            (i < 2 * k ? support : query).emplace_back(h, labels[i]);
        }
        std::vector<Eigen::VectorXd> gs, gq;
        prototype_loss_and_grads(support, query, gs, gq);
        RuParams grad = zero_like(ru.params);
        for (int i = 0; i < 2 * k; ++i) {
            add_scaled(grad, backward(ru, feats[i], traces[i], gs[i]), 1.0);
        }
        for (int i = 0; i < 2 * q; ++i) {
            add_scaled(grad, backward(ru, feats[2 * k + i], traces[2 * k + i], gq[i]), 1.0);
        }
        Eigen::VectorXd analytic = flatten_params(grad);

        Eigen::VectorXd theta = flatten_params(ru.params);
        const double eps = 1e-5;
        for (int i = 0; i < theta.size(); ++i) {
            Eigen::VectorXd tp = theta, tm = theta;
            tp[i] += eps;
            tm[i] -= eps;
            unflatten_params(tp, ru.params);
            double lp = episode_loss_now();
            unflatten_params(tm, ru.params);
            double lm = episode_loss_now();
            unflatten_params(theta, ru.params);
            double numeric = (lp - lm) / (2 * eps);
            double denom = std::max({1e-6, std::abs(numeric), std::abs(analytic[i])});
            if (std::abs(analytic[i] - numeric) / denom > 1e-3) return false;
        }
    }
    return true;
}

// 5. Masked batch aggregation equals per-document aggregation on 100 random
//    batches with lengths in [1, 140].
bool check_batch_equivalence() {
    Rng rng(808);
    for (int trial = 0; trial < 100; ++trial) {
        RuKind kind = static_cast<RuKind>(rng.bounded(3));
        RecurrentUnit ru = init_ru(kind, 6, 4, 1000 + trial);
        std::vector<FeatureSequence> batch;
        int B = 2 + static_cast<int>(rng.bounded(7));
        for (int i = 0; i < B; ++i) {
            FeatureSequence s;
            int T = 1 + static_cast<int>(rng.bounded(140));
            s.features = random_features(T, 6, rng);
            s.source_id = "d" + std::to_string(i);
            batch.push_back(std::move(s));
        }
        auto joint = aggregate_batch(ru, batch);
        for (int i = 0; i < B; ++i) {
            Eigen::VectorXd single = aggregate(ru, batch[i]).vector;
            if ((joint[i].vector - single).cwiseAbs().maxCoeff() > 1e-5) return false;
        }
    }
    return true;
}

// 6. Episode sampling invariants hold over 10,000 draws: class balance,
//    support/query disjointness, meta-class purity in conditional mode.
bool check_episode_invariants() {
    DatasetIndex index = docfsl::test::synthetic_index(5, 30);
    std::set<std::string> side = index.meta_classes;
    Rng meta_rng(99);
    for (int e = 0; e < 10000; ++e) {
        FslMode mode = e % 2 == 0 ? FslMode::conditional : FslMode::unconditional;
        int k = 1 + static_cast<int>(meta_rng.bounded(5));
        int q = 1 + static_cast<int>(meta_rng.bounded(5));
        Rng rng = Rng::keyed({4242, static_cast<uint64_t>(e)});
        Episode ep = sample_episode(index, side, mode, k, q, rng);
        if (static_cast<int>(ep.support.size()) != 2 * k) return false;
        if (static_cast<int>(ep.query.size()) != 2 * q) return false;
        if (ep.meta_class.has_value() != (mode == FslMode::conditional)) return false;
        std::set<std::string> ids;
        int sup_g = 0, qry_g = 0;
        for (auto& [s, y] : ep.support) {
            ids.insert(s.id);
            if (s.label != y) return false;
            if (y == Label::genuine) ++sup_g;
            if (ep.meta_class && s.meta_class != *ep.meta_class) return false;
        }
        for (auto& [s, y] : ep.query) {
            ids.insert(s.id);
            if (s.label != y) return false;
            if (y == Label::genuine) ++qry_g;
            if (ep.meta_class && s.meta_class != *ep.meta_class) return false;
        }
        if (static_cast<int>(ids.size()) != 2 * (k + q)) return false;
        if (sup_g != k || qry_g != q) return false;
    }
    return true;
}

// 7. End-to-end on a synthetic separable dataset through the real pipeline
//    (images -> patches -> backbone -> recurrent unit -> episodic training):
//    meta-test accuracy >= 0.95 and AUC >= 0.99 within a 2-minute budget.
bool check_end_to_end() {
    auto t0 = Clock::now();
    TempDir dir("accept_e2e");
    SyntheticSpec spec;
    spec.meta_classes = 4;
    spec.per_label_per_meta = 25;
    spec.separation = 10.0;
    spec.seed = 11;
    std::string manifest = make_synthetic_dataset(dir.file("data"), spec);
    DatasetIndex index = load_manifest(manifest);

    TrainConfig config;
    config.mode = FslMode::unconditional;
    config.k = 10;
    config.q = 10;
    config.episodes = 1000;
    config.eval_every = 1000;
    config.eval_episodes = 20;
    config.learning_rate = 5e-3;
    config.seed = 5;
    config.backbone = BackboneKind::mock;
    config.mock_feature_dim = 16;
    config.ru_kind = RuKind::gru;
    config.hidden_dim = 15;
    config.rescale = false;
    config.patch_size = 32;

    auto plan = repetition_plan(index, 1, 2, config.seed);
    auto extractor = mock_extractor(config.mock_feature_dim, config.seed);
    PipelineFeatureSource features(index, extractor, config.rescale, config.ref_height,
                                   config.ref_width, config.patch_size);

    auto [model, history] = train_run(config, index, plan[0], features);
    EvalReport report =
        evaluate_run(model, index, plan[0].test_meta_classes, config, features);
    double elapsed = seconds_since(t0);
    bool ok = report.accuracy >= 0.95 && report.auc >= 0.99 && elapsed < 120.0;
    if (!ok) {
        std::cerr << "  (end-to-end: accuracy " << report.accuracy << ", auc " << report.auc
                  << ", " << elapsed << "s)\n";
    }
    return ok;
}

// 8. The command-line trainer is run-to-run deterministic: identical flags
//    give byte-identical summaries, histories and checkpoints.
bool check_cli_determinism() {
    TempDir dir("accept_cli");
    if (run_cli("synth --out " + dir.file("data") + " --meta-classes 2 --per-label 12 --seed 3",
                dir.file("synth.log")) != 0) {
        return false;
    }
    std::string common =
        "train --manifest " + dir.file("data") + "/manifest.csv" +
        " --backbone mock --mock-dim 8 --ru lstm --hidden-dim 4 --episodes 8 --eval-every 4"
        " --eval-episodes 4 --k 3 --q 3 --patch-size 32 --no-rescale --seed 2 --out ";
    if (run_cli(common + dir.file("run_a"), dir.file("a.log")) != 0) return false;
    if (run_cli(common + dir.file("run_b"), dir.file("b.log")) != 0) return false;
    std::string sa = slurp(dir.file("run_a") + "/summary.json");
    return !sa.empty() && sa == slurp(dir.file("run_b") + "/summary.json") &&
           slurp(dir.file("run_a") + "/rep_000/history.json") ==
               slurp(dir.file("run_b") + "/rep_000/history.json") &&
           slurp(dir.file("run_a") + "/rep_000/final.ckpt") ==
               slurp(dir.file("run_b") + "/rep_000/final.ckpt");
}

// 9. On a single-meta-class manifest the conditional and unconditional
//    protocols coincide: identical episode draws and identical evaluation
//    reports, at the library level and through the CLI.
bool check_single_meta_equivalence() {
    DatasetIndex index = docfsl::test::synthetic_index(1, 40);
    std::set<std::string> side = index.meta_classes;
    for (int e = 0; e < 200; ++e) {
        Rng rc = Rng::keyed({7, static_cast<uint64_t>(e)});
        Rng ru = Rng::keyed({7, static_cast<uint64_t>(e)});
        Episode ec = sample_episode(index, side, FslMode::conditional, 5, 5, rc);
        Episode eu = sample_episode(index, side, FslMode::unconditional, 5, 5, ru);
        for (size_t i = 0; i < ec.support.size(); ++i) {
            if (ec.support[i].first.id != eu.support[i].first.id) return false;
        }
        for (size_t i = 0; i < ec.query.size(); ++i) {
            if (ec.query[i].first.id != eu.query[i].first.id) return false;
        }
    }

    TempDir dir("accept_meta");
    SyntheticSpec spec;
    spec.meta_classes = 1;
    spec.per_label_per_meta = 15;
    spec.seed = 9;
    std::string manifest = make_synthetic_dataset(dir.file("data"), spec);

    // any checkpoint works; train a tiny model on a two-meta dataset first
    if (run_cli("synth --out " + dir.file("train_data") + " --meta-classes 2 --per-label 12"
                " --seed 4",
                dir.file("s.log")) != 0) {
        return false;
    }
    if (run_cli("train --manifest " + dir.file("train_data") + "/manifest.csv" +
                    " --backbone mock --mock-dim 8 --ru gru --hidden-dim 4 --episodes 4"
                    " --eval-every 4 --eval-episodes 2 --k 3 --q 3 --patch-size 32 --no-rescale"
                    " --seed 6 --out " + dir.file("run"),
                dir.file("t.log")) != 0) {
        return false;
    }
    std::string common = "eval --checkpoint " + dir.file("run") + "/rep_000/final.ckpt" +
                         " --manifest " + manifest +
                         " --backbone mock --mock-dim 8 --episodes 10 --k 5 --q 5"
                         " --patch-size 32 --no-rescale --seed 1 --out ";
    if (run_cli(common + dir.file("c.json") + " --mode c-fsl", dir.file("c.log")) != 0) {
        return false;
    }
    if (run_cli(common + dir.file("u.json") + " --mode u-fsl", dir.file("u.log")) != 0) {
        return false;
    }
    std::string cj = slurp(dir.file("c.json"));
    return !cj.empty() && cj == slurp(dir.file("u.json"));
}

struct Criterion {
    const char* name;
    bool (*fn)();
};

}  // namespace

int main() {
    const Criterion criteria[] = {
        {"grid geometry: 70 patches for the reference document, planned in < 1 ms",
         check_grid_geometry},
        {"prototype classification matches a brute-force oracle on 1000 episodes",
         check_prototype_oracle},
        {"rank-based AUC matches the pairwise oracle on 1000 tied score sets",
         check_auc_oracle},
        {"BPTT gradients match finite differences through the episode loss (rnn/lstm/gru)",
         check_gradients},
        {"masked batch aggregation equals per-document aggregation (100 random batches)",
         check_batch_equivalence},
        {"episode sampling invariants hold over 10,000 draws", check_episode_invariants},
        {"end-to-end synthetic training reaches accuracy >= 0.95 and AUC >= 0.99 in < 2 min",
         check_end_to_end},
        {"command-line training is byte-identical across repeated runs",
         check_cli_determinism},
        {"conditional and unconditional protocols coincide on single-meta data",
         check_single_meta_equivalence},
    };

    int failures = 0;
    for (const auto& c : criteria) {
        bool ok = false;
        try {
            ok = c.fn();
        } catch (const std::exception& e) {
            std::cerr << "  (exception: " << e.what() << ")\n";
        }
        std::cout << (ok ? "PASS" : "FAIL") << " - " << c.name << std::endl;
        if (!ok) ++failures;
    }
    return failures == 0 ? 0 : 1;
}
