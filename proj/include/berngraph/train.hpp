#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "berngraph/gnn.hpp"
#include "berngraph/metrics.hpp"

namespace berngraph {

struct TrainOptions {
    double learning_rate = 1e-4;
    int epochs = 200;
    int batch_size = 32;
    uint64_t seed = 0;
    int patience = 0; // early stop on validation Jaccard; 0 disables
    int threads = 1;
};

// Minimal interface the shared minibatch/Adam loop drives. Implementations
// wrap a fixed dataset addressed by sample index; loss_and_grad and
// predict_sample must be safe to call concurrently.
class SampleNet {
public:
    virtual ~SampleNet() = default;
    virtual int64_t param_count() const = 0;
    virtual std::vector<ArrayRef> param_arrays() = 0;
    // Per-sample loss; writes the flat gradient (param_count doubles).
    virtual double loss_and_grad(int64_t sample, std::span<double> grad) const = 0;
    virtual Eigen::VectorXd predict_sample(int64_t sample) const = 0;
    virtual std::span<const uint8_t> sample_labels(int64_t sample) const = 0;
};

struct EpochStats {
    double train_loss = 0.0;
    MetricsReport val;
};

struct TrainLog {
    std::vector<EpochStats> history;
    int best_epoch = -1; // epoch with highest validation Jaccard (0-based)
    AdamState adam;
};

// Seeded-shuffle minibatch training. Per-sample gradients within a batch are
// computed into independent slots (parallelizable) and reduced in fixed
// index order, so the result is identical for any thread count.
// With patience > 0 the best-validation parameters are restored at the end.
TrainLog run_training(SampleNet& net,
                      std::span<const int64_t> train_samples,
                      std::span<const int64_t> val_samples,
                      const TrainOptions& opt);

// GNN adapter over a shared graph list.
class GnnNet : public SampleNet {
public:
    GnnNet(const std::vector<PatientGraph>* graphs, ModelParams params);

    ModelParams& params() { return params_; }
    const ModelParams& params() const { return params_; }

    int64_t param_count() const override;
    std::vector<ArrayRef> param_arrays() override;
    double loss_and_grad(int64_t sample, std::span<double> grad) const override;
    Eigen::VectorXd predict_sample(int64_t sample) const override;
    std::span<const uint8_t> sample_labels(int64_t sample) const override;

private:
    const std::vector<PatientGraph>* graphs_;
    ModelParams params_;
};

struct GnnTrainResult {
    ModelParams params;
    AdamState adam;
    std::vector<EpochStats> history;
    int best_epoch = -1;
};

GnnTrainResult train_gnn(const std::vector<PatientGraph>& graphs,
                         std::span<const int64_t> train_idx,
                         std::span<const int64_t> val_idx,
                         const GnnDims& dims, const TrainOptions& opt);

std::vector<Prediction> predict(const ModelParams& params,
                                const std::vector<PatientGraph>& graphs,
                                int threads = 1);

// Thresholded predictions for a trained model over graph indices.
std::vector<Prediction> predict_rows(const ModelParams& params,
                                     const std::vector<PatientGraph>& graphs,
                                     std::span<const int64_t> rows,
                                     int threads = 1);

} // namespace berngraph
