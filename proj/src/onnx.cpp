#include "docfsl/onnx.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <set>

#include "docfsl/common.hpp"

namespace docfsl::onnx {

namespace {

// ---------------------------------------------------------------------------
// Protobuf wire-format reader
// ---------------------------------------------------------------------------

class Reader {
  public:
    Reader(const uint8_t* data, size_t len) : p_(data), end_(data + len) {}

    bool done() const { return p_ >= end_; }

    uint64_t varint() {
        uint64_t v = 0;
        int shift = 0;
        while (p_ < end_) {
            uint8_t b = *p_++;
            v |= static_cast<uint64_t>(b & 0x7f) << shift;
            if (!(b & 0x80)) return v;
            shift += 7;
            if (shift >= 64) break;
        }
        throw DataError("onnx: truncated varint");
    }

    // Returns (field_number, wire_type).
    std::pair<uint32_t, uint32_t> tag() {
        uint64_t t = varint();
        return {static_cast<uint32_t>(t >> 3), static_cast<uint32_t>(t & 7)};
    }

    Reader subreader() {
        uint64_t len = varint();
        if (p_ + len > end_) throw DataError("onnx: truncated length-delimited field");
        Reader r(p_, len);
        p_ += len;
        return r;
    }

    std::string bytes() {
        uint64_t len = varint();
        if (p_ + len > end_) throw DataError("onnx: truncated bytes field");
        std::string s(reinterpret_cast<const char*>(p_), len);
        p_ += len;
        return s;
    }

    uint64_t fixed64() {
        if (p_ + 8 > end_) throw DataError("onnx: truncated fixed64");
        uint64_t v;
        std::memcpy(&v, p_, 8);
        p_ += 8;
        return v;
    }

    uint32_t fixed32() {
        if (p_ + 4 > end_) throw DataError("onnx: truncated fixed32");
        uint32_t v;
        std::memcpy(&v, p_, 4);
        p_ += 4;
        return v;
    }

    void skip(uint32_t wire_type) {
        switch (wire_type) {
            case 0: varint(); break;
            case 1: fixed64(); break;
            case 2: bytes(); break;
            case 5: fixed32(); break;
            default: throw DataError("onnx: unsupported wire type " + std::to_string(wire_type));
        }
    }

  private:
    const uint8_t* p_;
    const uint8_t* end_;
};

float bits_to_float(uint32_t b) {
    float f;
    std::memcpy(&f, &b, 4);
    return f;
}

int64_t zigzag_passthrough(uint64_t v) { return static_cast<int64_t>(v); }

Tensor parse_tensor(Reader r) {
    Tensor t;
    int32_t data_type = 1;  // FLOAT
    std::string raw;
    while (!r.done()) {
        auto [field, wire] = r.tag();
        switch (field) {
            case 1: t.shape.push_back(zigzag_passthrough(r.varint())); break;  // dims
            case 2: data_type = static_cast<int32_t>(r.varint()); break;
            case 4: {  // float_data, packed or unpacked
                if (wire == 2) {
                    Reader sub = r.subreader();
                    while (!sub.done()) t.data.push_back(bits_to_float(sub.fixed32()));
                } else {
                    t.data.push_back(bits_to_float(r.fixed32()));
                }
                break;
            }
            case 9: raw = r.bytes(); break;  // raw_data
            default: r.skip(wire); break;
        }
    }
    if (!raw.empty()) {
        if (data_type == 1) {  // float32
            t.data.resize(raw.size() / 4);
            std::memcpy(t.data.data(), raw.data(), t.data.size() * 4);
        } else if (data_type == 7) {  // int64 (shape tensors)
            size_t n = raw.size() / 8;
            t.data.resize(n);
            for (size_t i = 0; i < n; ++i) {
                int64_t v;
                std::memcpy(&v, raw.data() + i * 8, 8);
                t.data[i] = static_cast<float>(v);
            }
        } else if (data_type == 11) {  // double
            size_t n = raw.size() / 8;
            t.data.resize(n);
            for (size_t i = 0; i < n; ++i) {
                double v;
                std::memcpy(&v, raw.data() + i * 8, 8);
                t.data[i] = static_cast<float>(v);
            }
        } else {
            throw DataError("onnx: unsupported tensor data_type " + std::to_string(data_type));
        }
    }
    return t;
}

std::string parse_tensor_name(const uint8_t* data, size_t len) {
    Reader r(data, len);
    while (!r.done()) {
        auto [field, wire] = r.tag();
        if (field == 8 && wire == 2) return r.bytes();
        r.skip(wire);
    }
    return "";
}

Attribute parse_attribute(Reader r) {
    Attribute a;
    while (!r.done()) {
        auto [field, wire] = r.tag();
        switch (field) {
            case 1: a.name = r.bytes(); break;
            case 2: a.f = bits_to_float(r.fixed32()); break;
            case 3: a.i = zigzag_passthrough(r.varint()); break;
            case 4: a.s = r.bytes(); break;
            case 5:
                a.t = parse_tensor(r.subreader());
                a.has_tensor = true;
                break;
            case 7: {  // floats
                if (wire == 2) {
                    Reader sub = r.subreader();
                    while (!sub.done()) a.floats.push_back(bits_to_float(sub.fixed32()));
                } else {
                    a.floats.push_back(bits_to_float(r.fixed32()));
                }
                break;
            }
            case 8: {  // ints
                if (wire == 2) {
                    Reader sub = r.subreader();
                    while (!sub.done()) a.ints.push_back(zigzag_passthrough(sub.varint()));
                } else {
                    a.ints.push_back(zigzag_passthrough(r.varint()));
                }
                break;
            }
            default: r.skip(wire); break;
        }
    }
    return a;
}

Node parse_node(Reader r) {
    Node n;
    while (!r.done()) {
        auto [field, wire] = r.tag();
        switch (field) {
            case 1: n.inputs.push_back(r.bytes()); break;
            case 2: n.outputs.push_back(r.bytes()); break;
            case 3: n.name = r.bytes(); break;
            case 4: n.op_type = r.bytes(); break;
            case 5: {
                Attribute a = parse_attribute(r.subreader());
                n.attrs[a.name] = std::move(a);
                break;
            }
            default: r.skip(wire); break;
        }
    }
    return n;
}

std::vector<int64_t> parse_shape(Reader r) {
    // TensorShapeProto: repeated Dimension dim = 1; Dimension: dim_value=1, dim_param=2
    std::vector<int64_t> shape;
    while (!r.done()) {
        auto [field, wire] = r.tag();
        if (field == 1 && wire == 2) {
            Reader dim = r.subreader();
            int64_t value = -1;
            while (!dim.done()) {
                auto [df, dw] = dim.tag();
                if (df == 1 && dw == 0) value = zigzag_passthrough(dim.varint());
                else dim.skip(dw);
            }
            shape.push_back(value);
        } else {
            r.skip(wire);
        }
    }
    return shape;
}

ValueInfo parse_value_info(Reader r) {
    ValueInfo vi;
    while (!r.done()) {
        auto [field, wire] = r.tag();
        if (field == 1 && wire == 2) {
            vi.name = r.bytes();
        } else if (field == 2 && wire == 2) {
            // TypeProto -> tensor_type (1) -> shape (2)
            Reader type = r.subreader();
            while (!type.done()) {
                auto [tf, tw] = type.tag();
                if (tf == 1 && tw == 2) {
                    Reader tt = type.subreader();
                    while (!tt.done()) {
                        auto [sf, sw] = tt.tag();
                        if (sf == 2 && sw == 2) vi.shape = parse_shape(tt.subreader());
                        else tt.skip(sw);
                    }
                } else {
                    type.skip(tw);
                }
            }
        } else {
            r.skip(wire);
        }
    }
    return vi;
}

Model parse_graph(Reader r) {
    // initializers are collected in a separate pass (they carry their name
    // inside the TensorProto); here only structure is read.
    Model m;
    while (!r.done()) {
        auto [field, wire] = r.tag();
        switch (field) {
            case 1: m.nodes.push_back(parse_node(r.subreader())); break;
            case 11: m.inputs.push_back(parse_value_info(r.subreader())); break;
            case 12: m.outputs.push_back(parse_value_info(r.subreader())); break;
            default: r.skip(wire); break;
        }
    }
    return m;
}

}  // namespace

Model parse_model_bytes(const uint8_t* data, size_t len) {
    // ModelProto: graph lives in field 7.
    std::string graph_bytes;
    bool found = false;
    Reader r(data, len);
    while (!r.done()) {
        auto [field, wire] = r.tag();
        if (field == 7 && wire == 2) {
            graph_bytes = r.bytes();
            found = true;
        } else {
            r.skip(wire);
        }
    }
    if (!found) throw DataError("onnx: no graph found in model file");

    const uint8_t* gp = reinterpret_cast<const uint8_t*>(graph_bytes.data());
    const size_t gl = graph_bytes.size();

    Model m = parse_graph(Reader(gp, gl));

    // Second pass for initializers: TensorProto.name (field 8) lives inside
    // each entry, so read the raw bytes and parse name + payload separately.
    Reader gr(gp, gl);
    while (!gr.done()) {
        auto [field, wire] = gr.tag();
        if (field == 5 && wire == 2) {
            std::string tb = gr.bytes();
            const uint8_t* tp = reinterpret_cast<const uint8_t*>(tb.data());
            std::string name = parse_tensor_name(tp, tb.size());
            m.initializers[name] = parse_tensor(Reader(tp, tb.size()));
        } else {
            gr.skip(wire);
        }
    }
    // graph inputs that are backed by initializers are parameters, not inputs
    std::erase_if(m.inputs, [&](const ValueInfo& vi) { return m.initializers.count(vi.name); });
    return m;
}

Model parse_model_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("model file not found: " + path);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (bytes.empty()) throw DataError("model file is empty: " + path);
    return parse_model_bytes(reinterpret_cast<const uint8_t*>(bytes.data()), bytes.size());
}

// ---------------------------------------------------------------------------
// Executor
// ---------------------------------------------------------------------------

namespace {

int64_t attr_int(const Node& n, const std::string& name, int64_t def) {
    auto it = n.attrs.find(name);
    return it == n.attrs.end() ? def : it->second.i;
}

float attr_float(const Node& n, const std::string& name, float def) {
    auto it = n.attrs.find(name);
    return it == n.attrs.end() ? def : it->second.f;
}

std::vector<int64_t> attr_ints(const Node& n, const std::string& name,
                               std::vector<int64_t> def = {}) {
    auto it = n.attrs.find(name);
    return it == n.attrs.end() ? def : it->second.ints;
}

const Tensor& get(const std::map<std::string, Tensor>& env, const std::string& name,
                  const Node& n) {
    auto it = env.find(name);
    if (it == env.end()) {
        throw DataError("onnx: node '" + n.op_type + "' references unknown tensor '" + name + "'");
    }
    return it->second;
}

Tensor op_gemm(const Node& n, const Tensor& A, const Tensor& B, const Tensor* C) {
    if (A.shape.size() != 2 || B.shape.size() != 2) throw DataError("onnx: Gemm expects 2-D");
    bool tA = attr_int(n, "transA", 0) != 0;
    bool tB = attr_int(n, "transB", 0) != 0;
    float alpha = attr_float(n, "alpha", 1.0f);
    float beta = attr_float(n, "beta", 1.0f);
    int64_t M = tA ? A.shape[1] : A.shape[0];
    int64_t K = tA ? A.shape[0] : A.shape[1];
    int64_t Kb = tB ? B.shape[1] : B.shape[0];
    int64_t N = tB ? B.shape[0] : B.shape[1];
    if (K != Kb) throw DataError("onnx: Gemm inner dims mismatch");
    Tensor Y;
    Y.shape = {M, N};
    Y.data.assign(static_cast<size_t>(M * N), 0.0f);
    for (int64_t i = 0; i < M; ++i) {
        for (int64_t k = 0; k < K; ++k) {
            float a = tA ? A.data[k * M + i] : A.data[i * K + k];
            if (a == 0.0f) continue;
            for (int64_t j = 0; j < N; ++j) {
                float b = tB ? B.data[j * K + k] : B.data[k * N + j];
                Y.data[i * N + j] += a * b;
            }
        }
    }
    for (auto& v : Y.data) v *= alpha;
    if (C) {
        if (C->data.size() == static_cast<size_t>(N)) {
            for (int64_t i = 0; i < M; ++i)
                for (int64_t j = 0; j < N; ++j) Y.data[i * N + j] += beta * C->data[j];
        } else if (C->data.size() == Y.data.size()) {
            for (size_t i = 0; i < Y.data.size(); ++i) Y.data[i] += beta * C->data[i];
        } else {
            throw DataError("onnx: Gemm bias shape unsupported");
        }
    }
    return Y;
}

Tensor op_matmul(const Tensor& A, const Tensor& B) {
    if (A.shape.size() != 2 || B.shape.size() != 2) throw DataError("onnx: MatMul expects 2-D");
    int64_t M = A.shape[0], K = A.shape[1], N = B.shape[1];
    if (B.shape[0] != K) throw DataError("onnx: MatMul inner dims mismatch");
    Tensor Y;
    Y.shape = {M, N};
    Y.data.assign(static_cast<size_t>(M * N), 0.0f);
    for (int64_t i = 0; i < M; ++i)
        for (int64_t k = 0; k < K; ++k) {
            float a = A.data[i * K + k];
            for (int64_t j = 0; j < N; ++j) Y.data[i * N + j] += a * B.data[k * N + j];
        }
    return Y;
}

Tensor op_binary(const Tensor& A, const Tensor& B, bool mul) {
    Tensor Y = A;
    if (B.data.size() == A.data.size()) {
        for (size_t i = 0; i < Y.data.size(); ++i) {
            Y.data[i] = mul ? Y.data[i] * B.data[i] : Y.data[i] + B.data[i];
        }
        return Y;
    }
    // row-vector broadcast over the last axis
    if (!A.shape.empty() && B.data.size() == static_cast<size_t>(A.shape.back())) {
        size_t n = B.data.size();
        for (size_t i = 0; i < Y.data.size(); ++i) {
            float b = B.data[i % n];
            Y.data[i] = mul ? Y.data[i] * b : Y.data[i] + b;
        }
        return Y;
    }
    // per-channel broadcast for NCHW
    if (A.shape.size() == 4 && B.data.size() == static_cast<size_t>(A.shape[1])) {
        size_t hw = static_cast<size_t>(A.shape[2] * A.shape[3]);
        size_t chw = static_cast<size_t>(A.shape[1]) * hw;
        for (size_t i = 0; i < Y.data.size(); ++i) {
            float b = B.data[(i % chw) / hw];
            Y.data[i] = mul ? Y.data[i] * b : Y.data[i] + b;
        }
        return Y;
    }
    throw DataError("onnx: unsupported broadcast in Add/Mul");
}

Tensor op_conv(const Node& n, const Tensor& X, const Tensor& W, const Tensor* B) {
    if (X.shape.size() != 4 || W.shape.size() != 4) throw DataError("onnx: Conv expects 4-D");
    if (attr_int(n, "group", 1) != 1) throw DataError("onnx: grouped Conv unsupported");
    auto strides = attr_ints(n, "strides", {1, 1});
    auto pads = attr_ints(n, "pads", {0, 0, 0, 0});
    auto dil = attr_ints(n, "dilations", {1, 1});
    int64_t N = X.shape[0], C = X.shape[1], H = X.shape[2], Wd = X.shape[3];
    int64_t M = W.shape[0], kh = W.shape[2], kw = W.shape[3];
    if (W.shape[1] != C) throw DataError("onnx: Conv channel mismatch");
    int64_t oh = (H + pads[0] + pads[2] - dil[0] * (kh - 1) - 1) / strides[0] + 1;
    int64_t ow = (Wd + pads[1] + pads[3] - dil[1] * (kw - 1) - 1) / strides[1] + 1;
    Tensor Y;
    Y.shape = {N, M, oh, ow};
    Y.data.assign(Y.numel(), 0.0f);
    for (int64_t b = 0; b < N; ++b)
        for (int64_t m = 0; m < M; ++m)
            for (int64_t y = 0; y < oh; ++y)
                for (int64_t x = 0; x < ow; ++x) {
                    float acc = B ? B->data[m] : 0.0f;
                    for (int64_t c = 0; c < C; ++c)
                        for (int64_t i = 0; i < kh; ++i) {
                            int64_t sy = y * strides[0] + i * dil[0] - pads[0];
                            if (sy < 0 || sy >= H) continue;
                            for (int64_t j = 0; j < kw; ++j) {
                                int64_t sx = x * strides[1] + j * dil[1] - pads[1];
                                if (sx < 0 || sx >= Wd) continue;
                                acc += X.data[((b * C + c) * H + sy) * Wd + sx] *
                                       W.data[((m * C + c) * kh + i) * kw + j];
                            }
                        }
                    Y.data[((b * M + m) * oh + y) * ow + x] = acc;
                }
    return Y;
}

Tensor op_pool(const Node& n, const Tensor& X, bool is_max) {
    if (X.shape.size() != 4) throw DataError("onnx: pool expects 4-D");
    auto kernel = attr_ints(n, "kernel_shape");
    if (kernel.size() != 2) throw DataError("onnx: pool kernel_shape required");
    auto strides = attr_ints(n, "strides", kernel);
    auto pads = attr_ints(n, "pads", {0, 0, 0, 0});
    bool include_pad = attr_int(n, "count_include_pad", 0) != 0;
    int64_t N = X.shape[0], C = X.shape[1], H = X.shape[2], W = X.shape[3];
    int64_t oh = (H + pads[0] + pads[2] - kernel[0]) / strides[0] + 1;
    int64_t ow = (W + pads[1] + pads[3] - kernel[1]) / strides[1] + 1;
    Tensor Y;
    Y.shape = {N, C, oh, ow};
    Y.data.assign(Y.numel(), 0.0f);
    for (int64_t b = 0; b < N; ++b)
        for (int64_t c = 0; c < C; ++c)
            for (int64_t y = 0; y < oh; ++y)
                for (int64_t x = 0; x < ow; ++x) {
                    float best = -std::numeric_limits<float>::infinity();
                    double sum = 0.0;
                    int64_t count = 0;
                    for (int64_t i = 0; i < kernel[0]; ++i) {
                        int64_t sy = y * strides[0] + i - pads[0];
                        if (sy < 0 || sy >= H) continue;
                        for (int64_t j = 0; j < kernel[1]; ++j) {
                            int64_t sx = x * strides[1] + j - pads[1];
                            if (sx < 0 || sx >= W) continue;
                            float v = X.data[((b * C + c) * H + sy) * W + sx];
                            best = std::max(best, v);
                            sum += v;
                            ++count;
                        }
                    }
                    int64_t denom = include_pad ? kernel[0] * kernel[1] : count;
                    Y.data[((b * C + c) * oh + y) * ow + x] =
                        is_max ? best : static_cast<float>(sum / std::max<int64_t>(denom, 1));
                }
    return Y;
}

Tensor op_global_avg_pool(const Tensor& X) {
    if (X.shape.size() != 4) throw DataError("onnx: GlobalAveragePool expects 4-D");
    int64_t N = X.shape[0], C = X.shape[1];
    int64_t hw = X.shape[2] * X.shape[3];
    Tensor Y;
    Y.shape = {N, C, 1, 1};
    Y.data.assign(static_cast<size_t>(N * C), 0.0f);
    for (int64_t b = 0; b < N; ++b)
        for (int64_t c = 0; c < C; ++c) {
            double sum = 0.0;
            for (int64_t i = 0; i < hw; ++i) sum += X.data[(b * C + c) * hw + i];
            Y.data[b * C + c] = static_cast<float>(sum / hw);
        }
    return Y;
}

Tensor op_batchnorm(const Node& n, const Tensor& X, const Tensor& scale, const Tensor& bias,
                    const Tensor& mean, const Tensor& var) {
    float eps = attr_float(n, "epsilon", 1e-5f);
    if (X.shape.size() != 4 && X.shape.size() != 2) throw DataError("onnx: BatchNorm rank");
    int64_t C = X.shape[1];
    size_t hw = X.shape.size() == 4 ? static_cast<size_t>(X.shape[2] * X.shape[3]) : 1;
    size_t chw = static_cast<size_t>(C) * hw;
    Tensor Y = X;
    for (size_t i = 0; i < Y.data.size(); ++i) {
        size_t c = (i % chw) / hw;
        Y.data[i] = scale.data[c] * (X.data[i] - mean.data[c]) /
                        std::sqrt(var.data[c] + eps) +
                    bias.data[c];
    }
    return Y;
}

Tensor op_flatten(const Node& n, const Tensor& X) {
    int64_t axis = attr_int(n, "axis", 1);
    if (axis < 0) axis += static_cast<int64_t>(X.shape.size());
    int64_t outer = 1, inner = 1;
    for (size_t i = 0; i < X.shape.size(); ++i) {
        if (static_cast<int64_t>(i) < axis) outer *= X.shape[i];
        else inner *= X.shape[i];
    }
    Tensor Y = X;
    Y.shape = {outer, inner};
    return Y;
}

Tensor op_reshape(const Tensor& X, const Tensor& shape_tensor) {
    Tensor Y = X;
    std::vector<int64_t> shape;
    int64_t known = 1;
    int infer = -1;
    for (size_t i = 0; i < shape_tensor.data.size(); ++i) {
        int64_t d = static_cast<int64_t>(std::llround(shape_tensor.data[i]));
        if (d == 0) d = X.shape[i];
        if (d == -1) {
            infer = static_cast<int>(i);
            shape.push_back(-1);
            continue;
        }
        known *= d;
        shape.push_back(d);
    }
    if (infer >= 0) shape[infer] = static_cast<int64_t>(X.numel()) / known;
    Y.shape = shape;
    if (Y.numel() != X.numel()) throw DataError("onnx: Reshape element count mismatch");
    return Y;
}

}  // namespace

Tensor run(const Model& model, const Tensor& input) {
    if (model.inputs.size() != 1) throw DataError("onnx: expected exactly one graph input");
    if (model.outputs.size() != 1) throw DataError("onnx: expected exactly one graph output");

    std::map<std::string, Tensor> env = model.initializers;
    env[model.inputs[0].name] = input;

    for (const Node& n : model.nodes) {
        Tensor out;
        const std::string& op = n.op_type;
        if (op == "Gemm") {
            const Tensor* C = n.inputs.size() > 2 ? &get(env, n.inputs[2], n) : nullptr;
            out = op_gemm(n, get(env, n.inputs[0], n), get(env, n.inputs[1], n), C);
        } else if (op == "MatMul") {
            out = op_matmul(get(env, n.inputs[0], n), get(env, n.inputs[1], n));
        } else if (op == "Add" || op == "Sum") {
            out = op_binary(get(env, n.inputs[0], n), get(env, n.inputs[1], n), false);
        } else if (op == "Mul") {
            out = op_binary(get(env, n.inputs[0], n), get(env, n.inputs[1], n), true);
        } else if (op == "Relu") {
            out = get(env, n.inputs[0], n);
            for (auto& v : out.data) v = std::max(v, 0.0f);
        } else if (op == "Sigmoid") {
            out = get(env, n.inputs[0], n);
            for (auto& v : out.data) v = 1.0f / (1.0f + std::exp(-v));
        } else if (op == "Tanh") {
            out = get(env, n.inputs[0], n);
            for (auto& v : out.data) v = std::tanh(v);
        } else if (op == "Flatten") {
            out = op_flatten(n, get(env, n.inputs[0], n));
        } else if (op == "Reshape") {
            out = op_reshape(get(env, n.inputs[0], n), get(env, n.inputs[1], n));
        } else if (op == "Conv") {
            const Tensor* B = n.inputs.size() > 2 ? &get(env, n.inputs[2], n) : nullptr;
            out = op_conv(n, get(env, n.inputs[0], n), get(env, n.inputs[1], n), B);
        } else if (op == "MaxPool") {
            out = op_pool(n, get(env, n.inputs[0], n), true);
        } else if (op == "AveragePool") {
            out = op_pool(n, get(env, n.inputs[0], n), false);
        } else if (op == "GlobalAveragePool") {
            out = op_global_avg_pool(get(env, n.inputs[0], n));
        } else if (op == "BatchNormalization") {
            out = op_batchnorm(n, get(env, n.inputs[0], n), get(env, n.inputs[1], n),
                               get(env, n.inputs[2], n), get(env, n.inputs[3], n),
                               get(env, n.inputs[4], n));
        } else if (op == "Constant") {
            auto it = n.attrs.find("value");
            if (it == n.attrs.end() || !it->second.has_tensor) {
                throw DataError("onnx: Constant node without tensor value");
            }
            out = it->second.t;
        } else if (op == "Identity" || op == "Dropout") {
            out = get(env, n.inputs[0], n);
        } else {
            throw DataError("onnx: unsupported op '" + op + "'");
        }
        env[n.outputs[0]] = std::move(out);
    }
    return get(env, model.outputs[0].name, model.nodes.empty() ? Node{} : model.nodes.back());
}

}  // namespace docfsl::onnx
