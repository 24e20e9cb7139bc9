#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "docfsl/backbone.hpp"

namespace docfsl {

enum class RuKind { rnn, lstm, gru };

std::string to_string(RuKind k);
RuKind ru_kind_from_string(const std::string& s);

// One weight/bias set per gate: W maps input (m x n), U maps the previous
// hidden state (m x m), b is the bias (m). Gate order: rnn {h};
// lstm {i, f, g, o}; gru {z, r, candidate}.
struct RuParams {
    std::vector<Eigen::MatrixXd> W;
    std::vector<Eigen::MatrixXd> U;
    std::vector<Eigen::VectorXd> b;
};

struct RecurrentUnit {
    RuKind kind = RuKind::lstm;
    int input_dim = 0;   // n
    int hidden_dim = 0;  // m, always < n
    uint64_t seed = 0;
    RuParams params;

    int gate_count() const;
    int parameter_count() const;
};

struct DocumentEmbedding {
    Eigen::VectorXd vector;
    std::string source_id;
};

// Per-step activations kept for backpropagation through time.
struct RuTrace {
    std::vector<Eigen::VectorXd> h;               // h_0 (zeros) .. h_T
    std::vector<Eigen::VectorXd> c;               // lstm only: c_0 .. c_T
    std::vector<std::vector<Eigen::VectorXd>> g;  // per step, per gate activation
};

// Uniform init in [-1/sqrt(m), +1/sqrt(m)], deterministic per seed.
RecurrentUnit init_ru(RuKind kind, int input_dim, int hidden_dim, uint64_t seed);

// Many-to-one: zero initial state, returns the final hidden state h_T.
DocumentEmbedding aggregate(const RecurrentUnit& ru, const FeatureSequence& features);
Eigen::VectorXd aggregate_traced(const RecurrentUnit& ru, const Eigen::MatrixXd& features,
                                 RuTrace& trace);

// Step-synchronous batch with masking: rows past a sequence's true length
// never touch its state. Results match per-document aggregate calls.
std::vector<DocumentEmbedding> aggregate_batch(const RecurrentUnit& ru,
                                               const std::vector<FeatureSequence>& sequences);

// BPTT: gradient of a scalar loss w.r.t. every parameter, given dL/dh_T.
RuParams backward(const RecurrentUnit& ru, const Eigen::MatrixXd& features, const RuTrace& trace,
                  const Eigen::VectorXd& grad_hT);

// Flat parameter vector view, fixed ordering (gate, W row-major, U, b).
Eigen::VectorXd flatten_params(const RuParams& p);
void unflatten_params(const Eigen::VectorXd& v, RuParams& p);
RuParams zero_like(const RuParams& p);
void add_scaled(RuParams& dst, const RuParams& src, double scale);

// Versioned checkpoint; save/load round-trips byte-stably.
void save_checkpoint(const std::string& path, const RecurrentUnit& ru);
RecurrentUnit load_checkpoint(const std::string& path);

}  // namespace docfsl
