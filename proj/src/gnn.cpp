#include "berngraph/gnn.hpp"

#include <cmath>

#include <fmt/format.h>

#include "berngraph/errors.hpp"
#include "berngraph/rng.hpp"

namespace berngraph {

int64_t total_size(std::span<const ConstArrayRef> arrays) {
    int64_t n = 0;
    for (const auto& a : arrays) n += a.size;
    return n;
}

ModelParams ModelParams::zeros(const GnnDims& dims) {
    if (dims.hidden < 1 || dims.layers < 1 || dims.n_events < 1 || dims.n_drugs < 1) {
        throw Error(ErrorCode::invalid,
                    fmt::format("bad model dims (hidden {}, layers {}, events {}, drugs {})",
                                dims.hidden, dims.layers, dims.n_events, dims.n_drugs));
    }
    const int d = dims.hidden;
    ModelParams p;
    p.dims = dims;
    p.w_in = Eigen::VectorXd::Zero(d);
    p.b_in = Eigen::VectorXd::Zero(d);
    p.w_msg.assign(dims.layers, Eigen::MatrixXd::Zero(d, d + 1));
    p.b_msg.assign(dims.layers, Eigen::VectorXd::Zero(d));
    p.w_upd.assign(dims.layers, Eigen::MatrixXd::Zero(d, 2 * d));
    p.b_upd.assign(dims.layers, Eigen::VectorXd::Zero(d));
    p.w_out = Eigen::VectorXd::Zero(d);
    p.b_out = Eigen::VectorXd::Zero(1);
    p.w_read = Eigen::MatrixXd::Zero(dims.n_drugs, dims.n_events);
    p.b_read = Eigen::VectorXd::Zero(dims.n_drugs);
    return p;
}

namespace {

void fill_glorot(Rng& rng, double* data, int64_t n, int64_t fan_in, int64_t fan_out) {
    const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (int64_t k = 0; k < n; ++k) data[k] = rng.uniform_in(-a, a);
}

} // namespace

ModelParams ModelParams::glorot_init(const GnnDims& dims, uint64_t seed) {
    ModelParams p = zeros(dims);
    const int d = dims.hidden;
    Rng rng(mix_key(seed, 0x1417));
    fill_glorot(rng, p.w_in.data(), d, 1, d);
    for (int k = 0; k < dims.layers; ++k) {
        fill_glorot(rng, p.w_msg[k].data(), p.w_msg[k].size(), d + 1, d);
        fill_glorot(rng, p.w_upd[k].data(), p.w_upd[k].size(), 2 * d, d);
    }
    fill_glorot(rng, p.w_out.data(), d, d, 1);
    fill_glorot(rng, p.w_read.data(), p.w_read.size(), dims.n_events, dims.n_drugs);
    return p;
}

std::vector<ArrayRef> ModelParams::arrays() {
    std::vector<ArrayRef> out;
    out.push_back({"w_in", w_in.data(), w_in.size()});
    out.push_back({"b_in", b_in.data(), b_in.size()});
    for (int k = 0; k < dims.layers; ++k) {
        out.push_back({fmt::format("w_msg.{}", k + 1), w_msg[k].data(), w_msg[k].size()});
        out.push_back({fmt::format("b_msg.{}", k + 1), b_msg[k].data(), b_msg[k].size()});
        out.push_back({fmt::format("w_upd.{}", k + 1), w_upd[k].data(), w_upd[k].size()});
        out.push_back({fmt::format("b_upd.{}", k + 1), b_upd[k].data(), b_upd[k].size()});
    }
    out.push_back({"w_out", w_out.data(), w_out.size()});
    out.push_back({"b_out", b_out.data(), b_out.size()});
    out.push_back({"w_read", w_read.data(), w_read.size()});
    out.push_back({"b_read", b_read.data(), b_read.size()});
    return out;
}

std::vector<ConstArrayRef> ModelParams::arrays() const {
    auto mutable_arrays = const_cast<ModelParams*>(this)->arrays();
    return {mutable_arrays.begin(), mutable_arrays.end()};
}

int64_t ModelParams::param_count() const {
    int64_t n = 0;
    for (const auto& a : arrays()) n += a.size;
    return n;
}

// ---------------------------------------------------------------------------
// forward

namespace {

inline double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

void check_finite(const Eigen::MatrixXd& m, int layer, const char* stage) {
    if (m.allFinite()) return;
    for (Eigen::Index col = 0; col < m.cols(); ++col) {
        if (!m.col(col).allFinite()) {
            throw Error(ErrorCode::state,
                        fmt::format("non-finite {} value at layer {}, node {}", stage, layer,
                                    col));
        }
    }
}

} // namespace

const Eigen::VectorXd& forward(const PatientGraph& graph, const ModelParams& params,
                               ForwardCache& cache) {
    const GnnDims& dims = params.dims;
    const int d = dims.hidden;
    const auto m = static_cast<Eigen::Index>(dims.n_events);
    if (static_cast<Eigen::Index>(graph.node_values.size()) != m) {
        throw Error(ErrorCode::invalid,
                    fmt::format("graph has {} nodes, model expects {}", graph.node_values.size(),
                                dims.n_events));
    }
    if (!graph.edges || graph.edges->n_nodes != dims.n_events) {
        throw Error(ErrorCode::invalid, "graph edge set does not match model dims");
    }
    const EdgeSet& es = *graph.edges;
    const auto n_edges = static_cast<Eigen::Index>(es.size());

    cache.input = Eigen::Map<const Eigen::VectorXd>(graph.node_values.data(), m);

    cache.h0.noalias() = params.w_in * cache.input.transpose(); // d x M
    cache.h0.colwise() += params.b_in;
    cache.h0 = cache.h0.cwiseMax(0.0);
    check_finite(cache.h0, 0, "input-lift");

    cache.layers.resize(static_cast<size_t>(dims.layers));
    Eigen::MatrixXd src_lin(d, m); // W_m[:, :d] * h_prev, reused per layer

    for (int k = 0; k < dims.layers; ++k) {
        auto& L = cache.layers[static_cast<size_t>(k)];
        const Eigen::MatrixXd& h_prev = (k == 0) ? cache.h0 : cache.layers[k - 1].h;
        const auto w_node = params.w_msg[k].leftCols(d);
        const auto w_edge = params.w_msg[k].col(d);

        src_lin.noalias() = w_node * h_prev;

        L.messages.resize(d, n_edges);
        for (Eigen::Index e = 0; e < n_edges; ++e) {
            L.messages.col(e) =
                (src_lin.col(es.src[e]) + es.weight[e] * w_edge + params.b_msg[k]).cwiseMax(0.0);
        }

        // mean over in-neighbors; empty neighborhood stays the zero vector
        L.agg.setZero(d, m);
        for (Eigen::Index v = 0; v < m; ++v) {
            const int64_t begin = es.in_offsets[v], end = es.in_offsets[v + 1];
            if (begin == end) continue;
            for (int64_t e = begin; e < end; ++e) L.agg.col(v) += L.messages.col(e);
            L.agg.col(v) /= static_cast<double>(end - begin);
        }

        L.updated.noalias() = params.w_upd[k].leftCols(d) * h_prev;
        L.updated.noalias() += params.w_upd[k].rightCols(d) * L.agg;
        L.updated.colwise() += params.b_upd[k];
        L.updated = L.updated.cwiseMax(0.0);

        L.norms = L.updated.colwise().norm();
        L.h = L.updated;
        for (Eigen::Index v = 0; v < m; ++v) {
            if (L.norms(v) > 0.0) L.h.col(v) /= L.norms(v);
        }
        check_finite(L.h, k + 1, "node-feature");
    }

    cache.node_out.noalias() = cache.layers.back().h.transpose() * params.w_out;
    cache.node_out.array() += params.b_out(0);

    cache.logits.noalias() = params.w_read * cache.node_out;
    cache.logits += params.b_read;
    cache.probs.resize(cache.logits.size());
    for (Eigen::Index y = 0; y < cache.logits.size(); ++y) {
        cache.probs(y) = sigmoid(cache.logits(y));
    }
    if (!cache.probs.allFinite()) {
        throw Error(ErrorCode::state, "non-finite value in readout probabilities");
    }
    return cache.probs;
}

double bce_loss(const Eigen::VectorXd& probs, std::span<const uint8_t> labels) {
    if (static_cast<size_t>(probs.size()) != labels.size()) {
        throw Error(ErrorCode::invalid,
                    fmt::format("bce_loss: {} probs vs {} labels", probs.size(), labels.size()));
    }
    constexpr double kClip = 1e-12;
    double sum = 0.0;
    for (size_t y = 0; y < labels.size(); ++y) {
        const double p = probs(static_cast<Eigen::Index>(y));
        sum -= labels[y] ? std::log(std::max(p, kClip)) : std::log(std::max(1.0 - p, kClip));
    }
    return sum / static_cast<double>(labels.size());
}

// ---------------------------------------------------------------------------
// backward

void backward(const PatientGraph& graph, const ModelParams& params, const ForwardCache& cache,
              std::span<const uint8_t> labels, Gradients& out) {
    const GnnDims& dims = params.dims;
    const int d = dims.hidden;
    const auto m = static_cast<Eigen::Index>(dims.n_events);
    const auto c = static_cast<Eigen::Index>(dims.n_drugs);
    if (static_cast<Eigen::Index>(labels.size()) != c) {
        throw Error(ErrorCode::invalid,
                    fmt::format("backward: {} labels vs {} drugs", labels.size(), c));
    }
    const EdgeSet& es = *graph.edges;

    // dL/dlogit for mean BCE through the sigmoid
    Eigen::VectorXd dlogits(c);
    for (Eigen::Index y = 0; y < c; ++y) {
        dlogits(y) = (cache.probs(y) - static_cast<double>(labels[y])) / static_cast<double>(c);
    }

    out.w_read.noalias() = dlogits * cache.node_out.transpose();
    out.b_read = dlogits;

    Eigen::VectorXd dz = params.w_read.transpose() * dlogits; // M
    out.w_out.noalias() = cache.layers.back().h * dz;
    out.b_out(0) = dz.sum();

    Eigen::MatrixXd dh = params.w_out * dz.transpose(); // d x M

    Eigen::MatrixXd d_upd(d, m);
    Eigen::MatrixXd d_agg(d, m);
    Eigen::MatrixXd g_src(d, m); // per-source sums of message pre-activation grads
    Eigen::VectorXd dpre(d);

    for (int k = dims.layers - 1; k >= 0; --k) {
        const auto& L = cache.layers[static_cast<size_t>(k)];
        const Eigen::MatrixXd& h_prev = (k == 0) ? cache.h0 : cache.layers[k - 1].h;

        // L2 normalization: dU = (dh - h (h . dh)) / |u|, zero where |u| = 0
        for (Eigen::Index v = 0; v < m; ++v) {
            const double n = L.norms(v);
            if (n > 0.0) {
                const double proj = L.h.col(v).dot(dh.col(v));
                d_upd.col(v) = (dh.col(v) - L.h.col(v) * proj) / n;
            } else {
                d_upd.col(v).setZero();
            }
        }
        // relu (post-relu cache: positive output iff positive pre-activation)
        d_upd.array() *= (L.updated.array() > 0.0).cast<double>();

        out.w_upd[k].leftCols(d).noalias() = d_upd * h_prev.transpose();
        out.w_upd[k].rightCols(d).noalias() = d_upd * L.agg.transpose();
        out.b_upd[k] = d_upd.rowwise().sum();

        Eigen::MatrixXd dh_prev = params.w_upd[k].leftCols(d).transpose() * d_upd;
        d_agg.noalias() = params.w_upd[k].rightCols(d).transpose() * d_upd;

        g_src.setZero();
        Eigen::VectorXd d_wedge = Eigen::VectorXd::Zero(d);
        Eigen::VectorXd d_bmsg = Eigen::VectorXd::Zero(d);
        for (Eigen::Index v = 0; v < m; ++v) {
            const int64_t begin = es.in_offsets[v], end = es.in_offsets[v + 1];
            if (begin == end) continue;
            const double inv_deg = 1.0 / static_cast<double>(end - begin);
            for (int64_t e = begin; e < end; ++e) {
                dpre = (d_agg.col(v) * inv_deg).cwiseProduct(
                    (L.messages.col(e).array() > 0.0).cast<double>().matrix());
                g_src.col(es.src[e]) += dpre;
                d_wedge += dpre * es.weight[e];
                d_bmsg += dpre;
            }
        }
        out.w_msg[k].leftCols(d).noalias() = g_src * h_prev.transpose();
        out.w_msg[k].col(d) = d_wedge;
        out.b_msg[k] = d_bmsg;

        dh_prev.noalias() += params.w_msg[k].leftCols(d).transpose() * g_src;
        dh = std::move(dh_prev);
    }

    // input lift
    dh.array() *= (cache.h0.array() > 0.0).cast<double>();
    out.w_in.noalias() = dh * cache.input;
    out.b_in = dh.rowwise().sum();
}

// ---------------------------------------------------------------------------
// Adam

AdamState AdamState::sized(int64_t n) {
    AdamState st;
    st.m.assign(static_cast<size_t>(n), 0.0);
    st.v.assign(static_cast<size_t>(n), 0.0);
    return st;
}

void adam_step_flat(std::span<const ArrayRef> params, std::span<const double> flat_grad,
                    AdamState& state, double learning_rate) {
    int64_t total = 0;
    for (const auto& a : params) total += a.size;
    if (static_cast<int64_t>(flat_grad.size()) != total ||
        static_cast<int64_t>(state.m.size()) != total) {
        throw Error(ErrorCode::invalid,
                    fmt::format("adam_step: size mismatch ({} params, {} grads, {} moments)",
                                total, flat_grad.size(), state.m.size()));
    }
    for (double g : flat_grad) {
        if (!std::isfinite(g)) {
            throw Error(ErrorCode::state, "adam_step: non-finite gradient");
        }
    }
    state.step += 1;
    const double bc1 = 1.0 - std::pow(AdamState::beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(AdamState::beta2, static_cast<double>(state.step));
    int64_t offset = 0;
    for (const auto& a : params) {
        for (int64_t i = 0; i < a.size; ++i) {
            const int64_t idx = offset + i;
            const double g = flat_grad[static_cast<size_t>(idx)];
            double& mo = state.m[static_cast<size_t>(idx)];
            double& vo = state.v[static_cast<size_t>(idx)];
            mo = AdamState::beta1 * mo + (1.0 - AdamState::beta1) * g;
            vo = AdamState::beta2 * vo + (1.0 - AdamState::beta2) * g * g;
            const double m_hat = mo / bc1;
            const double v_hat = vo / bc2;
            a.data[i] -= learning_rate * m_hat / (std::sqrt(v_hat) + AdamState::eps);
        }
        offset += a.size;
    }
}

void adam_step(std::span<const ArrayRef> params, std::span<const ConstArrayRef> grads,
               AdamState& state, double learning_rate) {
    if (params.size() != grads.size()) {
        throw Error(ErrorCode::invalid, "adam_step: array count mismatch");
    }
    std::vector<double> flat;
    int64_t total = 0;
    for (const auto& g : grads) total += g.size;
    flat.reserve(static_cast<size_t>(total));
    for (size_t k = 0; k < grads.size(); ++k) {
        if (grads[k].size != params[k].size) {
            throw Error(ErrorCode::invalid,
                        fmt::format("adam_step: shape mismatch for '{}'", params[k].name));
        }
        flat.insert(flat.end(), grads[k].data, grads[k].data + grads[k].size);
    }
    adam_step_flat(params, flat, state, learning_rate);
}

} // namespace berngraph
