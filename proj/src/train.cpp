#include "berngraph/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

#include <fmt/format.h>

#include "berngraph/errors.hpp"
#include "berngraph/parallel.hpp"
#include "berngraph/rng.hpp"

namespace berngraph {

namespace {

void flatten_into(const std::vector<ConstArrayRef>& arrays, std::span<double> out) {
    size_t offset = 0;
    for (const auto& a : arrays) {
        std::memcpy(out.data() + offset, a.data, static_cast<size_t>(a.size) * sizeof(double));
        offset += static_cast<size_t>(a.size);
    }
}

void copy_flat_to_arrays(std::span<const double> flat, std::vector<ArrayRef>& arrays) {
    size_t offset = 0;
    for (auto& a : arrays) {
        std::memcpy(a.data, flat.data() + offset, static_cast<size_t>(a.size) * sizeof(double));
        offset += static_cast<size_t>(a.size);
    }
}

MetricsReport validation_metrics(const SampleNet& net, std::span<const int64_t> val_samples,
                                 int threads) {
    std::vector<Prediction> preds(val_samples.size());
    std::vector<std::vector<uint8_t>> labels(val_samples.size());
    parallel_for(static_cast<int64_t>(val_samples.size()), threads, [&](int64_t i) {
        const int64_t s = val_samples[static_cast<size_t>(i)];
        preds[static_cast<size_t>(i)] = make_prediction(net.predict_sample(s));
        auto lab = net.sample_labels(s);
        labels[static_cast<size_t>(i)].assign(lab.begin(), lab.end());
    });
    return metrics(preds, labels);
}

} // namespace

TrainLog run_training(SampleNet& net, std::span<const int64_t> train_samples,
                      std::span<const int64_t> val_samples, const TrainOptions& opt) {
    if (opt.epochs < 1) throw Error(ErrorCode::invalid, "epochs must be >= 1");
    if (opt.batch_size < 1) throw Error(ErrorCode::invalid, "batch_size must be >= 1");
    if (opt.learning_rate < 0) throw Error(ErrorCode::invalid, "learning rate must be >= 0");
    if (train_samples.empty()) throw Error(ErrorCode::invalid, "no training samples");

    const int64_t n_params = net.param_count();
    auto params = net.param_arrays();
    TrainLog log;
    log.adam = AdamState::sized(n_params);

    const size_t batch = static_cast<size_t>(opt.batch_size);
    std::vector<std::vector<double>> slots(batch, std::vector<double>(static_cast<size_t>(n_params)));
    std::vector<double> losses(batch, 0.0);
    std::vector<double> grad_sum(static_cast<size_t>(n_params));
    std::vector<double> best_params;
    double best_jaccard = -1.0;
    int since_best = 0;

    std::vector<int64_t> order(train_samples.begin(), train_samples.end());
    Rng shuffle_rng(mix_key(opt.seed, 0x50f1e));

    for (int epoch = 0; epoch < opt.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        double epoch_loss = 0.0;
        for (size_t b0 = 0; b0 < order.size(); b0 += batch) {
            const size_t b_count = std::min(batch, order.size() - b0);
            parallel_for(static_cast<int64_t>(b_count), opt.threads, [&](int64_t b) {
                const size_t s = static_cast<size_t>(b);
                losses[s] = net.loss_and_grad(order[b0 + s], slots[s]);
            });
            // fixed-order reduction: identical result for any thread count
            std::fill(grad_sum.begin(), grad_sum.end(), 0.0);
            double batch_loss = 0.0;
            for (size_t s = 0; s < b_count; ++s) {
                batch_loss += losses[s];
                const auto& slot = slots[s];
                for (size_t i = 0; i < grad_sum.size(); ++i) grad_sum[i] += slot[i];
            }
            const double inv = 1.0 / static_cast<double>(b_count);
            batch_loss *= inv;
            if (!std::isfinite(batch_loss)) {
                throw Error(ErrorCode::state,
                            fmt::format("training diverged: non-finite loss at epoch {}",
                                        epoch + 1));
            }
            for (double& g : grad_sum) g *= inv;
            adam_step_flat(params, grad_sum, log.adam, opt.learning_rate);
            epoch_loss += batch_loss * static_cast<double>(b_count);
        }

        EpochStats es;
        es.train_loss = epoch_loss / static_cast<double>(order.size());
        if (!val_samples.empty()) {
            es.val = validation_metrics(net, val_samples, opt.threads);
        }
        log.history.push_back(es);

        const double val_j = es.val.jaccard.mean;
        if (log.best_epoch < 0 || val_j > best_jaccard) {
            best_jaccard = val_j;
            log.best_epoch = epoch;
            since_best = 0;
            if (opt.patience > 0) {
                best_params.resize(static_cast<size_t>(n_params));
                flatten_into(std::vector<ConstArrayRef>(params.begin(), params.end()),
                             best_params);
            }
        } else if (opt.patience > 0 && ++since_best >= opt.patience) {
            break;
        }
    }

    if (opt.patience > 0 && !best_params.empty()) {
        copy_flat_to_arrays(best_params, params);
    }
    return log;
}

// ---------------------------------------------------------------------------
// GNN adapter

GnnNet::GnnNet(const std::vector<PatientGraph>* graphs, ModelParams params)
    : graphs_(graphs), params_(std::move(params)) {}

int64_t GnnNet::param_count() const { return params_.param_count(); }

std::vector<ArrayRef> GnnNet::param_arrays() { return params_.arrays(); }

namespace {

// Per-thread scratch; the multi-megabyte message caches and gradient
// buffers would otherwise be mapped and unmapped once per sample.
ForwardCache& scratch_cache() {
    thread_local ForwardCache cache;
    return cache;
}

Gradients& scratch_grads(const GnnDims& dims) {
    thread_local Gradients grads;
    if (grads.dims.hidden != dims.hidden || grads.dims.layers != dims.layers ||
        grads.dims.n_events != dims.n_events || grads.dims.n_drugs != dims.n_drugs) {
        grads = ModelParams::zeros(dims);
    }
    return grads;
}

} // namespace

double GnnNet::loss_and_grad(int64_t sample, std::span<double> grad) const {
    const PatientGraph& g = (*graphs_)[static_cast<size_t>(sample)];
    ForwardCache& cache = scratch_cache();
    forward(g, params_, cache);
    const double loss = bce_loss(cache.probs, g.labels);
    Gradients& grads = scratch_grads(params_.dims);
    backward(g, params_, cache, g.labels, grads);
    flatten_into(std::as_const(grads).arrays(), grad);
    return loss;
}

Eigen::VectorXd GnnNet::predict_sample(int64_t sample) const {
    ForwardCache& cache = scratch_cache();
    forward((*graphs_)[static_cast<size_t>(sample)], params_, cache);
    return cache.probs;
}

std::span<const uint8_t> GnnNet::sample_labels(int64_t sample) const {
    const auto& l = (*graphs_)[static_cast<size_t>(sample)].labels;
    return {l.data(), l.size()};
}

GnnTrainResult train_gnn(const std::vector<PatientGraph>& graphs,
                         std::span<const int64_t> train_idx, std::span<const int64_t> val_idx,
                         const GnnDims& dims, const TrainOptions& opt) {
    GnnNet net(&graphs, ModelParams::glorot_init(dims, opt.seed));
    TrainLog log = run_training(net, train_idx, val_idx, opt);
    GnnTrainResult result;
    result.params = std::move(net.params());
    result.adam = std::move(log.adam);
    result.history = std::move(log.history);
    result.best_epoch = log.best_epoch;
    return result;
}

std::vector<Prediction> predict(const ModelParams& params,
                                const std::vector<PatientGraph>& graphs, int threads) {
    std::vector<Prediction> preds(graphs.size());
    parallel_for(static_cast<int64_t>(graphs.size()), threads, [&](int64_t i) {
        ForwardCache& cache = scratch_cache();
        forward(graphs[static_cast<size_t>(i)], params, cache);
        preds[static_cast<size_t>(i)] = make_prediction(cache.probs);
    });
    return preds;
}

std::vector<Prediction> predict_rows(const ModelParams& params,
                                     const std::vector<PatientGraph>& graphs,
                                     std::span<const int64_t> rows, int threads) {
    std::vector<Prediction> preds(rows.size());
    parallel_for(static_cast<int64_t>(rows.size()), threads, [&](int64_t i) {
        ForwardCache& cache = scratch_cache();
        forward(graphs[static_cast<size_t>(rows[static_cast<size_t>(i)])], params, cache);
        preds[static_cast<size_t>(i)] = make_prediction(cache.probs);
    });
    return preds;
}

} // namespace berngraph
