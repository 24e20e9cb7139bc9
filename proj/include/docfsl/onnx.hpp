#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace docfsl::onnx {

struct Tensor {
    std::vector<int64_t> shape;
    std::vector<float> data;

    size_t numel() const {
        size_t n = 1;
        for (int64_t d : shape) n *= static_cast<size_t>(d);
        return n;
    }
};

struct Attribute {
    std::string name;
    int64_t i = 0;
    float f = 0.0f;
    std::string s;
    std::vector<int64_t> ints;
    std::vector<float> floats;
    Tensor t;
    bool has_tensor = false;
};

struct Node {
    std::string op_type;
    std::string name;
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
    std::map<std::string, Attribute> attrs;
};

struct ValueInfo {
    std::string name;
    std::vector<int64_t> shape;  // -1 for symbolic/dynamic dims
};

struct Model {
    std::vector<Node> nodes;
    std::map<std::string, Tensor> initializers;
    std::vector<ValueInfo> inputs;   // graph inputs that are not initializers
    std::vector<ValueInfo> outputs;
};

// Parses the ONNX protobuf wire format directly; only the fields needed for
// inference are retained. Throws DataError on malformed bytes.
Model parse_model_bytes(const uint8_t* data, size_t len);
Model parse_model_file(const std::string& path);

// Executes the graph on a single input tensor. Supported ops: Conv, Gemm,
// MatMul, Add, Mul, Relu, Sigmoid, Tanh, Flatten, Reshape, MaxPool,
// AveragePool, GlobalAveragePool, BatchNormalization, Constant, Identity.
Tensor run(const Model& model, const Tensor& input);

}  // namespace docfsl::onnx
