#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

#include "berngraph/metrics.hpp"
#include "berngraph/train.hpp"

namespace berngraph {

// One-vs-rest logistic regression: sigmoid(W x + b) per drug.
struct LinearModel {
    Eigen::MatrixXd w; // C x F
    Eigen::VectorXd b; // C

    static LinearModel zeros(int64_t n_features, int64_t n_drugs);
    std::vector<ArrayRef> arrays();
    std::vector<ConstArrayRef> arrays() const;
};

// One hidden relu layer (64 units by default), C-way sigmoid head.
struct MlpModel {
    Eigen::MatrixXd w1; // H x F
    Eigen::VectorXd b1; // H
    Eigen::MatrixXd w2; // C x H
    Eigen::VectorXd b2; // C

    static MlpModel glorot_init(int64_t n_features, int64_t n_drugs, int hidden, uint64_t seed);
    std::vector<ArrayRef> arrays();
    std::vector<ConstArrayRef> arrays() const;
};

Eigen::VectorXd linear_probs(const LinearModel& m, const Eigen::VectorXd& x);
Eigen::VectorXd mlp_probs(const MlpModel& m, const Eigen::VectorXd& x);

class LinearNet : public SampleNet {
public:
    LinearNet(const Eigen::MatrixXd* features, const std::vector<std::vector<uint8_t>>* labels,
              LinearModel model, double l2 = 0.0);
    LinearModel& model() { return model_; }
    int64_t param_count() const override;
    std::vector<ArrayRef> param_arrays() override;
    double loss_and_grad(int64_t sample, std::span<double> grad) const override;
    Eigen::VectorXd predict_sample(int64_t sample) const override;
    std::span<const uint8_t> sample_labels(int64_t sample) const override;

private:
    const Eigen::MatrixXd* features_; // rows x F
    const std::vector<std::vector<uint8_t>>* labels_;
    LinearModel model_;
    double l2_;
};

class MlpNet : public SampleNet {
public:
    MlpNet(const Eigen::MatrixXd* features, const std::vector<std::vector<uint8_t>>* labels,
           MlpModel model);
    MlpModel& model() { return model_; }
    int64_t param_count() const override;
    std::vector<ArrayRef> param_arrays() override;
    double loss_and_grad(int64_t sample, std::span<double> grad) const override;
    Eigen::VectorXd predict_sample(int64_t sample) const override;
    std::span<const uint8_t> sample_labels(int64_t sample) const override;

private:
    const Eigen::MatrixXd* features_;
    const std::vector<std::vector<uint8_t>>* labels_;
    MlpModel model_;
};

struct BaselineTrainResult {
    LinearModel linear;   // valid when kind == "lr"
    MlpModel mlp;         // valid when kind == "mlp"
    std::string kind;
    std::vector<EpochStats> history;
    int best_epoch = -1;
};

BaselineTrainResult train_lr(const Eigen::MatrixXd& features,
                             const std::vector<std::vector<uint8_t>>& labels,
                             std::span<const int64_t> train_idx,
                             std::span<const int64_t> val_idx,
                             const TrainOptions& opt, double l2 = 0.0);

BaselineTrainResult train_mlp(const Eigen::MatrixXd& features,
                              const std::vector<std::vector<uint8_t>>& labels,
                              std::span<const int64_t> train_idx,
                              std::span<const int64_t> val_idx,
                              int hidden, const TrainOptions& opt);

std::vector<Prediction> predict_linear(const LinearModel& m, const Eigen::MatrixXd& features,
                                       std::span<const int64_t> rows);
std::vector<Prediction> predict_mlp(const MlpModel& m, const Eigen::MatrixXd& features,
                                    std::span<const int64_t> rows);

} // namespace berngraph
