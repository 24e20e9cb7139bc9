#include "docfsl/recurrent.hpp"

#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "docfsl/common.hpp"
#include "docfsl/rng.hpp"

namespace docfsl {

namespace {

Eigen::VectorXd sigmoid(const Eigen::VectorXd& x) {
    return x.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
}

Eigen::VectorXd tanh_vec(const Eigen::VectorXd& x) {
    return x.unaryExpr([](double v) { return std::tanh(v); });
}

}  // namespace

std::string to_string(RuKind k) {
    switch (k) {
        case RuKind::rnn: return "rnn";
        case RuKind::lstm: return "lstm";
        case RuKind::gru: return "gru";
    }
    return "?";
}

RuKind ru_kind_from_string(const std::string& s) {
    if (s == "rnn") return RuKind::rnn;
    if (s == "lstm") return RuKind::lstm;
    if (s == "gru") return RuKind::gru;
    throw UsageError("unknown recurrent unit kind '" + s + "'");
}

int RecurrentUnit::gate_count() const {
    switch (kind) {
        case RuKind::rnn: return 1;
        case RuKind::lstm: return 4;
        case RuKind::gru: return 3;
    }
    return 0;
}

int RecurrentUnit::parameter_count() const {
    return gate_count() * (hidden_dim * input_dim + hidden_dim * hidden_dim + hidden_dim);
}

RecurrentUnit init_ru(RuKind kind, int input_dim, int hidden_dim, uint64_t seed) {
    if (input_dim < 1 || hidden_dim < 1) throw DataError("init_ru: dims must be >= 1");
    if (hidden_dim >= input_dim) {
        throw DataError("init_ru: hidden_dim (" + std::to_string(hidden_dim) +
                        ") must be < input_dim (" + std::to_string(input_dim) + ")");
    }
    RecurrentUnit ru;
    ru.kind = kind;
    ru.input_dim = input_dim;
    ru.hidden_dim = hidden_dim;
    ru.seed = seed;

    double bound = 1.0 / std::sqrt(static_cast<double>(hidden_dim));
    Rng rng = Rng::keyed({seed, static_cast<uint64_t>(kind), static_cast<uint64_t>(input_dim),
                          static_cast<uint64_t>(hidden_dim)});
    int gates = ru.gate_count();
    for (int g = 0; g < gates; ++g) {
        Eigen::MatrixXd W(hidden_dim, input_dim), U(hidden_dim, hidden_dim);
        Eigen::VectorXd b(hidden_dim);
        for (int i = 0; i < hidden_dim; ++i)
            for (int j = 0; j < input_dim; ++j) W(i, j) = rng.uniform(-bound, bound);
        for (int i = 0; i < hidden_dim; ++i)
            for (int j = 0; j < hidden_dim; ++j) U(i, j) = rng.uniform(-bound, bound);
        for (int i = 0; i < hidden_dim; ++i) b[i] = rng.uniform(-bound, bound);
        ru.params.W.push_back(std::move(W));
        ru.params.U.push_back(std::move(U));
        ru.params.b.push_back(std::move(b));
    }
    return ru;
}

namespace {

// One recurrence step; gate activations are appended to `gates` when tracing.
void step(const RecurrentUnit& ru, const Eigen::VectorXd& x, Eigen::VectorXd& h,
          Eigen::VectorXd& c, std::vector<Eigen::VectorXd>* gates) {
    const RuParams& p = ru.params;
    switch (ru.kind) {
        case RuKind::rnn: {
            Eigen::VectorXd hn = tanh_vec(p.W[0] * x + p.U[0] * h + p.b[0]);
            if (gates) *gates = {hn};
            h = hn;
            break;
        }
        case RuKind::lstm: {
            Eigen::VectorXd i = sigmoid(p.W[0] * x + p.U[0] * h + p.b[0]);
            Eigen::VectorXd f = sigmoid(p.W[1] * x + p.U[1] * h + p.b[1]);
            Eigen::VectorXd g = tanh_vec(p.W[2] * x + p.U[2] * h + p.b[2]);
            Eigen::VectorXd o = sigmoid(p.W[3] * x + p.U[3] * h + p.b[3]);
            c = f.cwiseProduct(c) + i.cwiseProduct(g);
            Eigen::VectorXd tc = tanh_vec(c);
            h = o.cwiseProduct(tc);
            if (gates) *gates = {i, f, g, o, tc};
            break;
        }
        case RuKind::gru: {
            Eigen::VectorXd z = sigmoid(p.W[0] * x + p.U[0] * h + p.b[0]);
            Eigen::VectorXd r = sigmoid(p.W[1] * x + p.U[1] * h + p.b[1]);
            Eigen::VectorXd cand = tanh_vec(p.W[2] * x + p.U[2] * h.cwiseProduct(r) + p.b[2]);
            Eigen::VectorXd hn = (Eigen::VectorXd::Ones(ru.hidden_dim) - z).cwiseProduct(h) +
                                 z.cwiseProduct(cand);
            if (gates) *gates = {z, r, cand};
            h = hn;
            break;
        }
    }
}

}  // namespace

Eigen::VectorXd aggregate_traced(const RecurrentUnit& ru, const Eigen::MatrixXd& features,
                                 RuTrace& trace) {
    if (features.rows() < 1) throw DataError("aggregate: empty feature sequence");
    if (features.cols() != ru.input_dim) {
        throw DataError("aggregate: feature width " + std::to_string(features.cols()) +
                        " != input_dim " + std::to_string(ru.input_dim));
    }
    int T = static_cast<int>(features.rows());
    Eigen::VectorXd h = Eigen::VectorXd::Zero(ru.hidden_dim);
    Eigen::VectorXd c = Eigen::VectorXd::Zero(ru.hidden_dim);
    trace.h = {h};
    trace.c = {c};
    trace.g.clear();
    for (int t = 0; t < T; ++t) {
        std::vector<Eigen::VectorXd> gates;
        step(ru, features.row(t).transpose(), h, c, &gates);
        if (!h.allFinite()) {
            throw NumericError("non-finite hidden state at step " + std::to_string(t));
        }
        trace.h.push_back(h);
        trace.c.push_back(c);
        trace.g.push_back(std::move(gates));
    }
    return h;
}

DocumentEmbedding aggregate(const RecurrentUnit& ru, const FeatureSequence& features) {
    if (features.features.rows() < 1) throw DataError("aggregate: empty feature sequence");
    if (features.features.cols() != ru.input_dim) {
        throw DataError("aggregate: feature width mismatch for '" + features.source_id + "'");
    }
    int T = features.length();
    Eigen::VectorXd h = Eigen::VectorXd::Zero(ru.hidden_dim);
    Eigen::VectorXd c = Eigen::VectorXd::Zero(ru.hidden_dim);
    for (int t = 0; t < T; ++t) {
        step(ru, features.features.row(t).transpose(), h, c, nullptr);
        if (!h.allFinite()) {
            throw NumericError("non-finite hidden state at step " + std::to_string(t) + " of '" +
                               features.source_id + "'");
        }
    }
    return {h, features.source_id};
}

std::vector<DocumentEmbedding> aggregate_batch(const RecurrentUnit& ru,
                                               const std::vector<FeatureSequence>& sequences) {
    int B = static_cast<int>(sequences.size());
    int maxT = 0;
    for (const auto& s : sequences) {
        if (s.features.rows() < 1) throw DataError("aggregate_batch: empty sequence");
        if (s.features.cols() != ru.input_dim) {
            throw DataError("aggregate_batch: feature width mismatch for '" + s.source_id + "'");
        }
        maxT = std::max(maxT, s.length());
    }
    std::vector<Eigen::VectorXd> h(B, Eigen::VectorXd::Zero(ru.hidden_dim));
    std::vector<Eigen::VectorXd> c(B, Eigen::VectorXd::Zero(ru.hidden_dim));
    for (int t = 0; t < maxT; ++t) {
        for (int i = 0; i < B; ++i) {
            if (t >= sequences[i].length()) continue;  // padded step: state frozen
            step(ru, sequences[i].features.row(t).transpose(), h[i], c[i], nullptr);
        }
    }
    std::vector<DocumentEmbedding> out(B);
    for (int i = 0; i < B; ++i) {
        if (!h[i].allFinite()) {
            throw NumericError("non-finite embedding for '" + sequences[i].source_id + "'");
        }
        out[i] = {h[i], sequences[i].source_id};
    }
    return out;
}

RuParams zero_like(const RuParams& p) {
    RuParams z;
    for (const auto& W : p.W) z.W.push_back(Eigen::MatrixXd::Zero(W.rows(), W.cols()));
    for (const auto& U : p.U) z.U.push_back(Eigen::MatrixXd::Zero(U.rows(), U.cols()));
    for (const auto& b : p.b) z.b.push_back(Eigen::VectorXd::Zero(b.size()));
    return z;
}

void add_scaled(RuParams& dst, const RuParams& src, double scale) {
    for (size_t g = 0; g < dst.W.size(); ++g) {
        dst.W[g] += scale * src.W[g];
        dst.U[g] += scale * src.U[g];
        dst.b[g] += scale * src.b[g];
    }
}

RuParams backward(const RecurrentUnit& ru, const Eigen::MatrixXd& features, const RuTrace& trace,
                  const Eigen::VectorXd& grad_hT) {
    const RuParams& p = ru.params;
    RuParams grad = zero_like(p);
    int T = static_cast<int>(features.rows());
    Eigen::VectorXd dh = grad_hT;
    Eigen::VectorXd dc = Eigen::VectorXd::Zero(ru.hidden_dim);

    for (int t = T - 1; t >= 0; --t) {
        Eigen::VectorXd x = features.row(t).transpose();
        const Eigen::VectorXd& h_prev = trace.h[t];
        switch (ru.kind) {
            case RuKind::rnn: {
                const Eigen::VectorXd& hn = trace.g[t][0];
                Eigen::VectorXd da =
                    dh.cwiseProduct(Eigen::VectorXd::Ones(ru.hidden_dim) - hn.cwiseProduct(hn));
                grad.W[0] += da * x.transpose();
                grad.U[0] += da * h_prev.transpose();
                grad.b[0] += da;
                dh = p.U[0].transpose() * da;
                break;
            }
            case RuKind::lstm: {
                const Eigen::VectorXd& i = trace.g[t][0];
                const Eigen::VectorXd& f = trace.g[t][1];
                const Eigen::VectorXd& g = trace.g[t][2];
                const Eigen::VectorXd& o = trace.g[t][3];
                const Eigen::VectorXd& tc = trace.g[t][4];
                const Eigen::VectorXd& c_prev = trace.c[t];

                Eigen::VectorXd ones = Eigen::VectorXd::Ones(ru.hidden_dim);
                Eigen::VectorXd d_o = dh.cwiseProduct(tc);
                Eigen::VectorXd dct =
                    dc + dh.cwiseProduct(o).cwiseProduct(ones - tc.cwiseProduct(tc));
                Eigen::VectorXd d_i = dct.cwiseProduct(g);
                Eigen::VectorXd d_g = dct.cwiseProduct(i);
                Eigen::VectorXd d_f = dct.cwiseProduct(c_prev);
                dc = dct.cwiseProduct(f);

                Eigen::VectorXd da_i = d_i.cwiseProduct(i).cwiseProduct(ones - i);
                Eigen::VectorXd da_f = d_f.cwiseProduct(f).cwiseProduct(ones - f);
                Eigen::VectorXd da_g = d_g.cwiseProduct(ones - g.cwiseProduct(g));
                Eigen::VectorXd da_o = d_o.cwiseProduct(o).cwiseProduct(ones - o);

                const Eigen::VectorXd* das[4] = {&da_i, &da_f, &da_g, &da_o};
                dh = Eigen::VectorXd::Zero(ru.hidden_dim);
                for (int gi = 0; gi < 4; ++gi) {
                    grad.W[gi] += (*das[gi]) * x.transpose();
                    grad.U[gi] += (*das[gi]) * h_prev.transpose();
                    grad.b[gi] += *das[gi];
                    dh += p.U[gi].transpose() * (*das[gi]);
                }
                break;
            }
            case RuKind::gru: {
                const Eigen::VectorXd& z = trace.g[t][0];
                const Eigen::VectorXd& r = trace.g[t][1];
                const Eigen::VectorXd& cand = trace.g[t][2];
                Eigen::VectorXd ones = Eigen::VectorXd::Ones(ru.hidden_dim);

                Eigen::VectorXd dz = dh.cwiseProduct(cand - h_prev);
                Eigen::VectorXd dcand = dh.cwiseProduct(z);
                Eigen::VectorXd dh_prev = dh.cwiseProduct(ones - z);

                Eigen::VectorXd da_c = dcand.cwiseProduct(ones - cand.cwiseProduct(cand));
                grad.W[2] += da_c * x.transpose();
                grad.U[2] += da_c * h_prev.cwiseProduct(r).transpose();
                grad.b[2] += da_c;
                Eigen::VectorXd drh = p.U[2].transpose() * da_c;
                Eigen::VectorXd dr = drh.cwiseProduct(h_prev);
                dh_prev += drh.cwiseProduct(r);

                Eigen::VectorXd da_z = dz.cwiseProduct(z).cwiseProduct(ones - z);
                Eigen::VectorXd da_r = dr.cwiseProduct(r).cwiseProduct(ones - r);
                grad.W[0] += da_z * x.transpose();
                grad.U[0] += da_z * h_prev.transpose();
                grad.b[0] += da_z;
                grad.W[1] += da_r * x.transpose();
                grad.U[1] += da_r * h_prev.transpose();
                grad.b[1] += da_r;
                dh_prev += p.U[0].transpose() * da_z + p.U[1].transpose() * da_r;
                dh = dh_prev;
                break;
            }
        }
    }
    return grad;
}

Eigen::VectorXd flatten_params(const RuParams& p) {
    size_t total = 0;
    for (size_t g = 0; g < p.W.size(); ++g) {
        total += p.W[g].size() + p.U[g].size() + p.b[g].size();
    }
    Eigen::VectorXd v(total);
    size_t off = 0;
    for (size_t g = 0; g < p.W.size(); ++g) {
        for (int i = 0; i < p.W[g].rows(); ++i)
            for (int j = 0; j < p.W[g].cols(); ++j) v[off++] = p.W[g](i, j);
        for (int i = 0; i < p.U[g].rows(); ++i)
            for (int j = 0; j < p.U[g].cols(); ++j) v[off++] = p.U[g](i, j);
        for (int i = 0; i < p.b[g].size(); ++i) v[off++] = p.b[g][i];
    }
    return v;
}

void unflatten_params(const Eigen::VectorXd& v, RuParams& p) {
    size_t off = 0;
    for (size_t g = 0; g < p.W.size(); ++g) {
        for (int i = 0; i < p.W[g].rows(); ++i)
            for (int j = 0; j < p.W[g].cols(); ++j) p.W[g](i, j) = v[off++];
        for (int i = 0; i < p.U[g].rows(); ++i)
            for (int j = 0; j < p.U[g].cols(); ++j) p.U[g](i, j) = v[off++];
        for (int i = 0; i < p.b[g].size(); ++i) p.b[g][i] = v[off++];
    }
    if (off != static_cast<size_t>(v.size())) {
        throw DataError("parameter vector size mismatch");
    }
}

static constexpr int kCheckpointVersion = 1;

void save_checkpoint(const std::string& path, const RecurrentUnit& ru) {
    nlohmann::json j;
    j["format_version"] = kCheckpointVersion;
    j["kind"] = to_string(ru.kind);
    j["input_dim"] = ru.input_dim;
    j["hidden_dim"] = ru.hidden_dim;
    j["seed"] = ru.seed;
    Eigen::VectorXd flat = flatten_params(ru.params);
    std::vector<double> values(flat.data(), flat.data() + flat.size());
    j["params"] = values;
    std::ofstream out(path);
    if (!out) throw DataError("cannot write checkpoint: " + path);
    out << j.dump(2) << '\n';
}

RecurrentUnit load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("checkpoint not found: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("corrupt checkpoint " + path + ": " + e.what());
    }
    if (j.value("format_version", -1) != kCheckpointVersion) {
        throw DataError("unsupported checkpoint format_version in " + path);
    }
    RecurrentUnit ru = init_ru(ru_kind_from_string(j.at("kind").get<std::string>()),
                               j.at("input_dim").get<int>(), j.at("hidden_dim").get<int>(),
                               j.at("seed").get<uint64_t>());
    std::vector<double> values = j.at("params").get<std::vector<double>>();
    Eigen::VectorXd flat =
        Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<int>(values.size()));
    if (flat.size() != ru.parameter_count()) {
        throw DataError("checkpoint parameter count mismatch in " + path);
    }
    unflatten_params(flat, ru.params);
    return ru;
}

}  // namespace docfsl
