#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "berngraph/graph.hpp"

namespace berngraph {

// Named view over a contiguous parameter block. Flattening order across a
// model's arrays() is the documented checkpoint order; matrices flatten
// column-major (Eigen default).
struct ArrayRef {
    std::string name;
    double* data = nullptr;
    int64_t size = 0;
};

struct ConstArrayRef {
    std::string name;
    const double* data = nullptr;
    int64_t size = 0;

    ConstArrayRef(std::string n, const double* d, int64_t s)
        : name(std::move(n)), data(d), size(s) {}
    ConstArrayRef(const ArrayRef& r) : name(r.name), data(r.data), size(r.size) {}
};

int64_t total_size(std::span<const ConstArrayRef> arrays);

struct GnnDims {
    int hidden = 128;
    int layers = 2;
    int n_events = 0;
    int n_drugs = 0;
};

// Edge-featured message-passing network. Node input is one scalar, lifted to
// `hidden` dims; per layer, each directed edge (j -> i) emits
// relu(W_m (h_j (+) e_ij) + b_m), messages are mean-aggregated per
// destination, and nodes update via relu(W_u (h_i (+) agg_i) + b_u) followed
// by L2 normalization. Readout maps per-node scalars, concatenated, to the
// drug logits.
struct ModelParams {
    GnnDims dims;

    Eigen::VectorXd w_in;  // d
    Eigen::VectorXd b_in;  // d
    std::vector<Eigen::MatrixXd> w_msg; // layers, each d x (d+1)
    std::vector<Eigen::VectorXd> b_msg; // layers, each d
    std::vector<Eigen::MatrixXd> w_upd; // layers, each d x 2d
    std::vector<Eigen::VectorXd> b_upd; // layers, each d
    Eigen::VectorXd w_out;  // d
    Eigen::VectorXd b_out;  // 1
    Eigen::MatrixXd w_read; // C x M
    Eigen::VectorXd b_read; // C

    static ModelParams zeros(const GnnDims& dims);
    // Uniform +-sqrt(6 / (fan_in + fan_out)) weights, zero biases.
    static ModelParams glorot_init(const GnnDims& dims, uint64_t seed);

    // Order: w_in, b_in, then per layer w_msg, b_msg, w_upd, b_upd,
    // then w_out, b_out, w_read, b_read.
    std::vector<ArrayRef> arrays();
    std::vector<ConstArrayRef> arrays() const;
    int64_t param_count() const;
};

using Gradients = ModelParams;

struct ForwardCache {
    Eigen::VectorXd input; // M node scalars
    Eigen::MatrixXd h0;    // d x M, post-relu
    struct LayerCache {
        Eigen::MatrixXd messages; // d x E, post-relu
        Eigen::MatrixXd agg;      // d x M
        Eigen::MatrixXd updated;  // d x M, post-relu, pre-normalization
        Eigen::VectorXd norms;    // M
        Eigen::MatrixXd h;        // d x M, normalized
    };
    std::vector<LayerCache> layers;
    Eigen::VectorXd node_out; // M per-node readout scalars (z)
    Eigen::VectorXd logits;   // C
    Eigen::VectorXd probs;    // C
};

// Deterministic pure function of (graph, params). Throws with layer/node
// context if an intermediate goes non-finite.
const Eigen::VectorXd& forward(const PatientGraph& graph, const ModelParams& params,
                               ForwardCache& cache);

// Mean binary cross-entropy over drugs; probabilities clipped at 1e-12.
double bce_loss(const Eigen::VectorXd& probs, std::span<const uint8_t> labels);

// Exact reverse-mode gradients of bce_loss through the forward pass,
// including the L2-normalization Jacobian and relu subgradient (0 at 0).
// Overwrites `out`.
void backward(const PatientGraph& graph, const ModelParams& params,
              const ForwardCache& cache, std::span<const uint8_t> labels,
              Gradients& out);

struct AdamState {
    std::vector<double> m; // first moments, flat in arrays() order
    std::vector<double> v; // second moments
    int64_t step = 0;
    static constexpr double beta1 = 0.9;
    static constexpr double beta2 = 0.999;
    static constexpr double eps = 1e-8;

    static AdamState sized(int64_t n);
};

// Standard bias-corrected Adam update over the flattened parameter blocks.
// Throws on non-finite gradients.
void adam_step(std::span<const ArrayRef> params, std::span<const ConstArrayRef> grads,
               AdamState& state, double learning_rate);

// Same update with the gradient already flattened in arrays() order.
void adam_step_flat(std::span<const ArrayRef> params, std::span<const double> flat_grad,
                    AdamState& state, double learning_rate);

} // namespace berngraph
