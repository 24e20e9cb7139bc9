#include "docfsl/fsl.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "docfsl/common.hpp"

namespace docfsl {

std::string to_string(FslMode m) {
    return m == FslMode::conditional ? "conditional" : "unconditional";
}

FslMode fsl_mode_from_string(const std::string& s) {
    if (s == "conditional" || s == "c-fsl") return FslMode::conditional;
    if (s == "unconditional" || s == "u-fsl") return FslMode::unconditional;
    throw UsageError("unknown FSL mode '" + s + "'");
}

HeadKind head_kind_from_string(const std::string& s) {
    if (s == "prototype") return HeadKind::prototype;
    if (s == "nearest_support") return HeadKind::nearest_support;
    throw UsageError("unknown head '" + s + "'");
}

namespace {

// Indices into index.samples for one label within an eligible scope.
std::vector<size_t> pool_for(const DatasetIndex& index, const std::set<std::string>& split_side,
                             const std::optional<std::string>& meta, Label label) {
    std::vector<size_t> pool;
    for (size_t i = 0; i < index.samples.size(); ++i) {
        const auto& s = index.samples[i];
        if (s.label != label) continue;
        if (meta) {
            if (s.meta_class != *meta) continue;
        } else if (!split_side.count(s.meta_class)) {
            continue;
        }
        pool.push_back(i);
    }
    return pool;
}

}  // namespace

Episode sample_episode(const DatasetIndex& index, const std::set<std::string>& split_side,
                       FslMode mode, int k, int q, Rng& rng) {
    if (k < 1 || q < 1) throw DataError("sample_episode: k and q must be >= 1");
    const int need = k + q;

    std::optional<std::string> meta;
    if (mode == FslMode::conditional) {
        std::vector<std::string> eligible;
        std::string best_short_meta;
        std::string best_short_label;
        for (const auto& mc : split_side) {  // std::set iterates sorted
            int g = 0, f = 0;
            if (auto it = index.counts.find({mc, Label::genuine}); it != index.counts.end())
                g = it->second;
            if (auto it = index.counts.find({mc, Label::fake}); it != index.counts.end())
                f = it->second;
            if (g >= need && f >= need) {
                eligible.push_back(mc);
            } else if (best_short_meta.empty()) {
                best_short_meta = mc;
                best_short_label = g < need ? "genuine" : "fake";
            }
        }
        if (eligible.empty()) {
            throw DataError("no meta-class with >= " + std::to_string(need) +
                            " samples per label; limiting meta-class '" + best_short_meta +
                            "', label " + best_short_label);
        }
        meta = eligible[rng.bounded(eligible.size())];
    }

    auto genuine_pool = pool_for(index, split_side, meta, Label::genuine);
    auto fake_pool = pool_for(index, split_side, meta, Label::fake);
    if (static_cast<int>(genuine_pool.size()) < need) {
        throw DataError("insufficient genuine samples: need " + std::to_string(need) + ", have " +
                        std::to_string(genuine_pool.size()) +
                        (meta ? " in meta-class '" + *meta + "'" : " in the unconditional pool"));
    }
    if (static_cast<int>(fake_pool.size()) < need) {
        throw DataError("insufficient fake samples: need " + std::to_string(need) + ", have " +
                        std::to_string(fake_pool.size()) +
                        (meta ? " in meta-class '" + *meta + "'" : " in the unconditional pool"));
    }

    auto genuine_draw = rng.sample(genuine_pool, static_cast<size_t>(need));
    auto fake_draw = rng.sample(fake_pool, static_cast<size_t>(need));

    Episode ep;
    ep.mode = mode;
    ep.meta_class = meta;
    ep.k = k;
    ep.q = q;

    std::vector<std::pair<DocumentSample, Label>> sup_g, sup_f, qry_g, qry_f;
    for (int i = 0; i < need; ++i) {
        auto& gs = index.samples[genuine_draw[i]];
        auto& fsamp = index.samples[fake_draw[i]];
        if (i < k) {
            sup_g.emplace_back(gs, Label::genuine);
            sup_f.emplace_back(fsamp, Label::fake);
        } else {
            qry_g.emplace_back(gs, Label::genuine);
            qry_f.emplace_back(fsamp, Label::fake);
        }
    }

    bool fake_first = rng.bounded(2) == 1;
    rng.shuffle(sup_g);
    rng.shuffle(sup_f);
    rng.shuffle(qry_g);
    rng.shuffle(qry_f);
    auto append = [](auto& dst, const auto& a, const auto& b) {
        dst.insert(dst.end(), a.begin(), a.end());
        dst.insert(dst.end(), b.begin(), b.end());
    };
    if (fake_first) {
        append(ep.support, sup_f, sup_g);
        append(ep.query, qry_f, qry_g);
    } else {
        append(ep.support, sup_g, sup_f);
        append(ep.query, qry_g, qry_f);
    }
    return ep;
}

PrototypePair compute_prototypes(
    const std::vector<std::pair<Eigen::VectorXd, Label>>& support_embeddings) {
    Eigen::VectorXd sum_g, sum_f;
    int n_g = 0, n_f = 0;
    for (const auto& [v, label] : support_embeddings) {
        Eigen::VectorXd& sum = label == Label::genuine ? sum_g : sum_f;
        int& n = label == Label::genuine ? n_g : n_f;
        if (n == 0) sum = v;
        else sum += v;
        ++n;
    }
    if (n_g == 0 || n_f == 0) {
        throw DataError(std::string("compute_prototypes: no support embeddings for label ") +
                        (n_g == 0 ? "genuine" : "fake"));
    }
    return {sum_g / n_g, sum_f / n_f};
}

namespace {

std::pair<double, double> softmax_neg(double d_g, double d_f) {
    // softmax over (-d_g, -d_f), shifted for stability
    double mx = std::max(-d_g, -d_f);
    double eg = std::exp(-d_g - mx);
    double ef = std::exp(-d_f - mx);
    double z = eg + ef;
    return {eg / z, ef / z};
}

void push_result(EpisodeResult& r, double d_g, double d_f) {
    r.distances.emplace_back(d_g, d_f);
    r.probabilities.push_back(softmax_neg(d_g, d_f));
    r.predictions.push_back(d_g <= d_f ? Label::genuine : Label::fake);
}

}  // namespace

EpisodeResult classify_queries(const PrototypePair& prototypes,
                               const std::vector<Eigen::VectorXd>& queries, FslMode mode,
                               const std::map<std::string, PrototypePair>* per_meta_prototypes,
                               const std::vector<std::string>* query_meta_classes) {
    EpisodeResult result;
    for (size_t i = 0; i < queries.size(); ++i) {
        const PrototypePair* pair = &prototypes;
        if (mode == FslMode::conditional && per_meta_prototypes) {
            if (!query_meta_classes || query_meta_classes->size() != queries.size()) {
                throw DataError("conditional classification needs per-query meta-classes");
            }
            auto it = per_meta_prototypes->find((*query_meta_classes)[i]);
            if (it == per_meta_prototypes->end()) {
                throw DataError("no prototypes for meta-class '" + (*query_meta_classes)[i] + "'");
            }
            pair = &it->second;
        }
        double d_g = (queries[i] - pair->genuine_prototype).squaredNorm();
        double d_f = (queries[i] - pair->fake_prototype).squaredNorm();
        push_result(result, d_g, d_f);
    }
    return result;
}

EpisodeResult classify_queries_nearest(
    const std::vector<std::pair<Eigen::VectorXd, Label>>& support_embeddings,
    const std::vector<Eigen::VectorXd>& queries) {
    EpisodeResult result;
    for (const auto& qv : queries) {
        double d_g = std::numeric_limits<double>::infinity();
        double d_f = std::numeric_limits<double>::infinity();
        for (const auto& [sv, label] : support_embeddings) {
            double d = (qv - sv).squaredNorm();
            if (label == Label::genuine) d_g = std::min(d_g, d);
            else d_f = std::min(d_f, d);
        }
        if (!std::isfinite(d_g) || !std::isfinite(d_f)) {
            throw DataError("nearest-support head needs support vectors for both labels");
        }
        push_result(result, d_g, d_f);
    }
    return result;
}

double episode_loss(const EpisodeResult& result, const std::vector<Label>& true_labels) {
    if (result.probabilities.size() != true_labels.size()) {
        throw DataError("episode_loss: result/labels length mismatch");
    }
    if (true_labels.empty()) throw DataError("episode_loss: no queries");
    constexpr double eps = 1e-12;
    double sum = 0.0;
    for (size_t i = 0; i < true_labels.size(); ++i) {
        double p = true_labels[i] == Label::genuine ? result.probabilities[i].first
                                                    : result.probabilities[i].second;
        sum += -std::log(std::clamp(p, eps, 1.0 - eps));
    }
    return sum / static_cast<double>(true_labels.size());
}

double prototype_loss_and_grads(
    const std::vector<std::pair<Eigen::VectorXd, Label>>& support_embeddings,
    const std::vector<std::pair<Eigen::VectorXd, Label>>& query_embeddings,
    std::vector<Eigen::VectorXd>& grad_support, std::vector<Eigen::VectorXd>& grad_query) {
    PrototypePair protos = compute_prototypes(support_embeddings);
    int n_g = 0, n_f = 0;
    for (const auto& [v, label] : support_embeddings) (label == Label::genuine ? n_g : n_f)++;

    const int m = static_cast<int>(protos.genuine_prototype.size());
    const size_t Q = query_embeddings.size();
    if (Q == 0) throw DataError("prototype_loss_and_grads: no queries");

    grad_support.assign(support_embeddings.size(), Eigen::VectorXd::Zero(m));
    grad_query.assign(Q, Eigen::VectorXd::Zero(m));
    Eigen::VectorXd grad_proto_g = Eigen::VectorXd::Zero(m);
    Eigen::VectorXd grad_proto_f = Eigen::VectorXd::Zero(m);

    double loss = 0.0;
    for (size_t j = 0; j < Q; ++j) {
        const auto& [qv, y] = query_embeddings[j];
        Eigen::VectorXd diff_g = qv - protos.genuine_prototype;
        Eigen::VectorXd diff_f = qv - protos.fake_prototype;
        auto [p_g, p_f] = softmax_neg(diff_g.squaredNorm(), diff_f.squaredNorm());
        double p_true = y == Label::genuine ? p_g : p_f;
        loss += -std::log(std::clamp(p_true, 1e-12, 1.0 - 1e-12));

        // dL/dlogit_c = (p_c - 1[y=c]) / Q with logit_c = -d_c
        double gl_g = (p_g - (y == Label::genuine ? 1.0 : 0.0)) / static_cast<double>(Q);
        double gl_f = (p_f - (y == Label::fake ? 1.0 : 0.0)) / static_cast<double>(Q);
        // dL/dd_c = -gl_c; dd_c/dq = 2*diff_c; dd_c/dproto_c = -2*diff_c
        grad_query[j] += -gl_g * 2.0 * diff_g - gl_f * 2.0 * diff_f;
        grad_proto_g += gl_g * 2.0 * diff_g;
        grad_proto_f += gl_f * 2.0 * diff_f;
    }
    loss /= static_cast<double>(Q);

    for (size_t s = 0; s < support_embeddings.size(); ++s) {
        if (support_embeddings[s].second == Label::genuine) {
            grad_support[s] = grad_proto_g / n_g;
        } else {
            grad_support[s] = grad_proto_f / n_f;
        }
    }
    return loss;
}

std::string episode_to_json(const Episode& episode, const std::string& rng_tag) {
    nlohmann::json j;
    j["mode"] = to_string(episode.mode);
    if (episode.meta_class) j["meta_class"] = *episode.meta_class;
    else j["meta_class"] = nullptr;
    j["k"] = episode.k;
    j["q"] = episode.q;
    auto dump = [](const std::vector<std::pair<DocumentSample, Label>>& v) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& [s, label] : v) {
            arr.push_back({{"id", s.id}, {"label", to_string(label)}});
        }
        return arr;
    };
    j["support"] = dump(episode.support);
    j["query"] = dump(episode.query);
    j["rng_state"] = rng_tag;
    return j.dump(2);
}

}  // namespace docfsl
