// network.hpp — feedforward towers mapping feature vectors to continuous code
// activations. Hidden layers are ReLU; the final hash layer squashes through
// tanh so activations stay inside (-1, 1). Backpropagation starts from caller
// supplied residuals at the final pre-activation, so the loss side stays out
// of this header entirely.
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "crosshash/errors.hpp"
#include "crosshash/io_util.hpp"
#include "crosshash/matrix.hpp"
#include "crosshash/rng.hpp"

namespace crosshash {

struct Tower {
    std::vector<std::size_t> layer_sizes;        // [d_in, h_1, ..., b]
    std::vector<Matrix> weights;                 // weights[k]: sizes[k+1] x sizes[k]
    std::vector<std::vector<double>> biases;     // biases[k]: sizes[k+1]

    std::size_t layer_count() const { return weights.size(); }
    std::size_t input_dim() const { return layer_sizes.front(); }
    std::size_t code_bits() const { return layer_sizes.back(); }

    bool operator==(const Tower& o) const {
        return layer_sizes == o.layer_sizes && weights == o.weights && biases == o.biases;
    }
};

// Glorot-uniform weights, zero biases.
inline Tower init_tower(const std::vector<std::size_t>& layer_sizes, std::uint64_t seed) {
    if (layer_sizes.size() < 2)
        throw std::invalid_argument("init_tower: need at least 2 layer sizes, got " +
                                    std::to_string(layer_sizes.size()));
    for (std::size_t s : layer_sizes)
        if (s == 0) throw std::invalid_argument("init_tower: layer sizes must be positive");

    Tower t;
    t.layer_sizes = layer_sizes;
    Rng rng(seed, "tower-init");
    for (std::size_t k = 0; k + 1 < layer_sizes.size(); ++k) {
        const std::size_t fan_in = layer_sizes[k];
        const std::size_t fan_out = layer_sizes[k + 1];
        const double s = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        Matrix w(fan_out, fan_in);
        for (double& v : w.data) v = rng.uniform(-s, s);
        t.weights.push_back(std::move(w));
        t.biases.emplace_back(fan_out, 0.0);
    }
    return t;
}

struct ForwardTrace {
    Matrix input;              // the batch, kept for the first-layer gradient
    std::vector<Matrix> pre;   // pre[k]: pre-activations of layer k
    std::vector<Matrix> post;  // post[k]: activations; post.back() = tanh(pre.back())

    const Matrix& activations() const { return post.back(); }      // z
    const Matrix& pre_activations() const { return pre.back(); }   // z-tilde
};

inline ForwardTrace forward(const Tower& t, const Matrix& batch) {
    if (batch.cols != t.input_dim())
        throw std::invalid_argument("forward: batch has " + std::to_string(batch.cols) +
                                    " columns, tower expects " + std::to_string(t.input_dim()));
    ForwardTrace trace;
    trace.input = batch;
    const Matrix* cur = &trace.input;
    for (std::size_t k = 0; k < t.layer_count(); ++k) {
        Matrix pre = matmul(*cur, transpose(t.weights[k]));
        for (std::size_t i = 0; i < pre.rows; ++i) {
            double* row = pre.data.data() + i * pre.cols;
            for (std::size_t j = 0; j < pre.cols; ++j) row[j] += t.biases[k][j];
        }
        Matrix post(pre.rows, pre.cols);
        if (k + 1 == t.layer_count()) {
            post = tanh_elementwise(pre);
        } else {
            for (std::size_t i = 0; i < pre.data.size(); ++i)
                post.data[i] = pre.data[i] > 0.0 ? pre.data[i] : 0.0;
        }
        trace.pre.push_back(std::move(pre));
        trace.post.push_back(std::move(post));
        cur = &trace.post.back();
    }
    return trace;
}

struct Gradients {
    std::vector<Matrix> weights;
    std::vector<std::vector<double>> biases;
};

inline void accumulate(Gradients& into, const Gradients& from) {
    for (std::size_t k = 0; k < into.weights.size(); ++k) {
        for (std::size_t i = 0; i < into.weights[k].data.size(); ++i)
            into.weights[k].data[i] += from.weights[k].data[i];
        for (std::size_t j = 0; j < into.biases[k].size(); ++j)
            into.biases[k][j] += from.biases[k][j];
    }
}

// Propagates residuals (dC/d z-tilde at the final pre-activation, summed over
// the batch) back through the hidden layers. ReLU gradient at exactly 0 is 0.
inline Gradients backward(const Tower& t, const ForwardTrace& trace, const Matrix& residuals) {
    const Matrix& final_pre = trace.pre.back();
    if (residuals.rows != final_pre.rows || residuals.cols != final_pre.cols)
        throw std::invalid_argument("backward: residual shape " + shape_string(residuals) +
                                    " does not match final layer " + shape_string(final_pre));
    Gradients g;
    g.weights.resize(t.layer_count());
    g.biases.resize(t.layer_count());

    Matrix delta = residuals;
    for (std::size_t k = t.layer_count(); k-- > 0;) {
        const Matrix& layer_input = (k == 0) ? trace.input : trace.post[k - 1];
        g.weights[k] = matmul_at(delta, layer_input);
        g.biases[k].assign(t.layer_sizes[k + 1], 0.0);
        for (std::size_t i = 0; i < delta.rows; ++i)
            for (std::size_t j = 0; j < delta.cols; ++j) g.biases[k][j] += delta(i, j);
        if (k > 0) {
            Matrix prev = matmul(delta, t.weights[k]);
            const Matrix& pre = trace.pre[k - 1];
            for (std::size_t i = 0; i < prev.data.size(); ++i)
                if (!(pre.data[i] > 0.0)) prev.data[i] = 0.0;
            delta = std::move(prev);
        }
    }
    return g;
}

struct OptimizerState {
    double learning_rate = 0.01;
    double momentum = 0.9;
    std::vector<Matrix> velocity_w;
    std::vector<std::vector<double>> velocity_b;
    std::vector<double> layer_lr_scale;  // per-layer multiplier on learning_rate

    static OptimizerState for_tower(const Tower& t, double lr, double momentum,
                                    double final_layer_scale = 1.0) {
        OptimizerState s;
        s.learning_rate = lr;
        s.momentum = momentum;
        for (std::size_t k = 0; k < t.layer_count(); ++k) {
            s.velocity_w.emplace_back(t.weights[k].rows, t.weights[k].cols);
            s.velocity_b.emplace_back(t.biases[k].size(), 0.0);
            s.layer_lr_scale.push_back(k + 1 == t.layer_count() ? final_layer_scale : 1.0);
        }
        return s;
    }
};

// v <- momentum * v - lr * grad;  param <- param + v
inline void sgd_step(Tower& t, const Gradients& grads, OptimizerState& state) {
    if (grads.weights.size() != t.layer_count())
        throw std::invalid_argument("sgd_step: gradient layer count " +
                                    std::to_string(grads.weights.size()) + " vs tower " +
                                    std::to_string(t.layer_count()));
    for (std::size_t k = 0; k < t.layer_count(); ++k) {
        if (grads.weights[k].rows != t.weights[k].rows || grads.weights[k].cols != t.weights[k].cols)
            throw std::invalid_argument("sgd_step: gradient shape " +
                                        shape_string(grads.weights[k]) + " vs weights " +
                                        shape_string(t.weights[k]) + " at layer " + std::to_string(k));
        const double lr = state.learning_rate * state.layer_lr_scale[k];
        Matrix& vw = state.velocity_w[k];
        for (std::size_t i = 0; i < vw.data.size(); ++i) {
            vw.data[i] = state.momentum * vw.data[i] - lr * grads.weights[k].data[i];
            t.weights[k].data[i] += vw.data[i];
        }
        std::vector<double>& vb = state.velocity_b[k];
        for (std::size_t j = 0; j < vb.size(); ++j) {
            vb[j] = state.momentum * vb[j] - lr * grads.biases[k][j];
            t.biases[k][j] += vb[j];
        }
    }
}

inline constexpr const char* kTowerMagic = "crosshash-tower v1";

inline void save_tower(const Tower& t, const std::filesystem::path& path) {
    std::ofstream out = open_output(path);
    out << kTowerMagic << "\n";
    out << "layers " << t.layer_sizes.size();
    for (std::size_t s : t.layer_sizes) out << " " << s;
    out << "\n";
    for (std::size_t k = 0; k < t.layer_count(); ++k) {
        out << "weights " << k << "\n";
        for (std::size_t i = 0; i < t.weights[k].rows; ++i) {
            for (std::size_t j = 0; j < t.weights[k].cols; ++j) {
                if (j) out << " ";
                out << format_double(t.weights[k](i, j));
            }
            out << "\n";
        }
        out << "biases " << k << "\n";
        for (std::size_t j = 0; j < t.biases[k].size(); ++j) {
            if (j) out << " ";
            out << format_double(t.biases[k][j]);
        }
        out << "\n";
    }
    finish_output(out, path);
}

inline Tower load_tower(const std::filesystem::path& path) {
    std::ifstream in = open_input(path);
    const std::string where = "tower checkpoint '" + path.string() + "'";
    std::string line;
    if (!std::getline(in, line) || line != kTowerMagic)
        throw IoError(where + ": bad magic line '" + line + "'");
    if (!std::getline(in, line)) throw IoError(where + ": missing layer header");
    auto toks = split_tokens(line);
    if (toks.size() < 2 || toks[0] != "layers") throw IoError(where + ": bad layer header");
    const std::size_t n_layers = static_cast<std::size_t>(parse_int(toks[1], where));
    if (toks.size() != 2 + n_layers || n_layers < 2)
        throw IoError(where + ": layer header lists " + std::to_string(toks.size() - 2) +
                      " sizes, expected " + std::to_string(n_layers));
    std::vector<std::size_t> sizes;
    for (std::size_t k = 0; k < n_layers; ++k)
        sizes.push_back(static_cast<std::size_t>(parse_int(toks[2 + k], where)));

    Tower t;
    t.layer_sizes = sizes;
    for (std::size_t k = 0; k + 1 < n_layers; ++k) {
        if (!std::getline(in, line) || line != "weights " + std::to_string(k))
            throw IoError(where + ": expected 'weights " + std::to_string(k) + "'");
        Matrix w(sizes[k + 1], sizes[k]);
        for (std::size_t i = 0; i < w.rows; ++i) {
            if (!std::getline(in, line)) throw IoError(where + ": truncated weight rows");
            auto row = split_tokens(line);
            if (row.size() != w.cols)
                throw IoError(where + ": weight row " + std::to_string(i) + " has " +
                              std::to_string(row.size()) + " values, expected " +
                              std::to_string(w.cols));
            for (std::size_t j = 0; j < w.cols; ++j) w(i, j) = parse_double(row[j], where);
        }
        if (!std::getline(in, line) || line != "biases " + std::to_string(k))
            throw IoError(where + ": expected 'biases " + std::to_string(k) + "'");
        if (!std::getline(in, line)) throw IoError(where + ": truncated biases");
        auto brow = split_tokens(line);
        if (brow.size() != sizes[k + 1])
            throw IoError(where + ": bias row has " + std::to_string(brow.size()) +
                          " values, expected " + std::to_string(sizes[k + 1]));
        std::vector<double> b(sizes[k + 1]);
        for (std::size_t j = 0; j < b.size(); ++j) b[j] = parse_double(brow[j], where);
        t.weights.push_back(std::move(w));
        t.biases.push_back(std::move(b));
    }
    return t;
}

}  // namespace crosshash
