#include "berngraph/baselines.hpp"

#include <cmath>
#include <cstring>

#include <fmt/format.h>

#include "berngraph/errors.hpp"
#include "berngraph/rng.hpp"

namespace berngraph {

namespace {

inline double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

Eigen::VectorXd sigmoid_vec(Eigen::VectorXd v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = sigmoid(v(i));
    return v;
}

double bce_from_probs(const Eigen::VectorXd& probs, std::span<const uint8_t> labels) {
    constexpr double kClip = 1e-12;
    double sum = 0.0;
    for (size_t y = 0; y < labels.size(); ++y) {
        const double p = probs(static_cast<Eigen::Index>(y));
        sum -= labels[y] ? std::log(std::max(p, kClip)) : std::log(std::max(1.0 - p, kClip));
    }
    return sum / static_cast<double>(labels.size());
}

} // namespace

LinearModel LinearModel::zeros(int64_t n_features, int64_t n_drugs) {
    LinearModel m;
    m.w = Eigen::MatrixXd::Zero(n_drugs, n_features);
    m.b = Eigen::VectorXd::Zero(n_drugs);
    return m;
}

std::vector<ArrayRef> LinearModel::arrays() {
    return {{"w", w.data(), w.size()}, {"b", b.data(), b.size()}};
}

std::vector<ConstArrayRef> LinearModel::arrays() const {
    auto a = const_cast<LinearModel*>(this)->arrays();
    return {a.begin(), a.end()};
}

MlpModel MlpModel::glorot_init(int64_t n_features, int64_t n_drugs, int hidden, uint64_t seed) {
    if (hidden < 1) throw Error(ErrorCode::invalid, "mlp hidden size must be >= 1");
    MlpModel m;
    m.w1 = Eigen::MatrixXd(hidden, n_features);
    m.b1 = Eigen::VectorXd::Zero(hidden);
    m.w2 = Eigen::MatrixXd(n_drugs, hidden);
    m.b2 = Eigen::VectorXd::Zero(n_drugs);
    Rng rng(mix_key(seed, 0x3317));
    const double a1 = std::sqrt(6.0 / static_cast<double>(n_features + hidden));
    for (Eigen::Index i = 0; i < m.w1.size(); ++i) m.w1.data()[i] = rng.uniform_in(-a1, a1);
    const double a2 = std::sqrt(6.0 / static_cast<double>(hidden + n_drugs));
    for (Eigen::Index i = 0; i < m.w2.size(); ++i) m.w2.data()[i] = rng.uniform_in(-a2, a2);
    return m;
}

std::vector<ArrayRef> MlpModel::arrays() {
    return {{"w1", w1.data(), w1.size()},
            {"b1", b1.data(), b1.size()},
            {"w2", w2.data(), w2.size()},
            {"b2", b2.data(), b2.size()}};
}

std::vector<ConstArrayRef> MlpModel::arrays() const {
    auto a = const_cast<MlpModel*>(this)->arrays();
    return {a.begin(), a.end()};
}

Eigen::VectorXd linear_probs(const LinearModel& m, const Eigen::VectorXd& x) {
    if (x.size() != m.w.cols()) {
        throw Error(ErrorCode::invalid,
                    fmt::format("linear model expects {} features, got {}", m.w.cols(), x.size()));
    }
    return sigmoid_vec(m.w * x + m.b);
}

Eigen::VectorXd mlp_probs(const MlpModel& m, const Eigen::VectorXd& x) {
    if (x.size() != m.w1.cols()) {
        throw Error(ErrorCode::invalid,
                    fmt::format("mlp expects {} features, got {}", m.w1.cols(), x.size()));
    }
    Eigen::VectorXd h = (m.w1 * x + m.b1).cwiseMax(0.0);
    return sigmoid_vec(m.w2 * h + m.b2);
}

// ---------------------------------------------------------------------------

LinearNet::LinearNet(const Eigen::MatrixXd* features,
                     const std::vector<std::vector<uint8_t>>* labels, LinearModel model,
                     double l2)
    : features_(features), labels_(labels), model_(std::move(model)), l2_(l2) {}

int64_t LinearNet::param_count() const { return model_.w.size() + model_.b.size(); }

std::vector<ArrayRef> LinearNet::param_arrays() { return model_.arrays(); }

double LinearNet::loss_and_grad(int64_t sample, std::span<double> grad) const {
    const Eigen::VectorXd x = features_->row(sample).transpose();
    const auto& t = (*labels_)[static_cast<size_t>(sample)];
    const Eigen::VectorXd p = linear_probs(model_, x);
    const auto c = static_cast<double>(t.size());

    Eigen::VectorXd dlogit(p.size());
    for (Eigen::Index y = 0; y < p.size(); ++y) {
        dlogit(y) = (p(y) - static_cast<double>(t[static_cast<size_t>(y)])) / c;
    }
    Eigen::Map<Eigen::MatrixXd> dw(grad.data(), model_.w.rows(), model_.w.cols());
    Eigen::Map<Eigen::VectorXd> db(grad.data() + model_.w.size(), model_.b.size());
    dw.noalias() = dlogit * x.transpose();
    db = dlogit;

    double loss = bce_from_probs(p, t);
    if (l2_ > 0.0) {
        loss += 0.5 * l2_ * model_.w.squaredNorm();
        dw.noalias() += l2_ * model_.w;
    }
    return loss;
}

Eigen::VectorXd LinearNet::predict_sample(int64_t sample) const {
    return linear_probs(model_, features_->row(sample).transpose());
}

std::span<const uint8_t> LinearNet::sample_labels(int64_t sample) const {
    const auto& l = (*labels_)[static_cast<size_t>(sample)];
    return {l.data(), l.size()};
}

MlpNet::MlpNet(const Eigen::MatrixXd* features, const std::vector<std::vector<uint8_t>>* labels,
               MlpModel model)
    : features_(features), labels_(labels), model_(std::move(model)) {}

int64_t MlpNet::param_count() const {
    return model_.w1.size() + model_.b1.size() + model_.w2.size() + model_.b2.size();
}

std::vector<ArrayRef> MlpNet::param_arrays() { return model_.arrays(); }

double MlpNet::loss_and_grad(int64_t sample, std::span<double> grad) const {
    const Eigen::VectorXd x = features_->row(sample).transpose();
    const auto& t = (*labels_)[static_cast<size_t>(sample)];
    const Eigen::VectorXd pre1 = model_.w1 * x + model_.b1;
    const Eigen::VectorXd h = pre1.cwiseMax(0.0);
    const Eigen::VectorXd p = sigmoid_vec(model_.w2 * h + model_.b2);
    const auto c = static_cast<double>(t.size());

    Eigen::VectorXd dlogit(p.size());
    for (Eigen::Index y = 0; y < p.size(); ++y) {
        dlogit(y) = (p(y) - static_cast<double>(t[static_cast<size_t>(y)])) / c;
    }
    Eigen::VectorXd dh = model_.w2.transpose() * dlogit;
    dh.array() *= (pre1.array() > 0.0).cast<double>();

    double* ptr = grad.data();
    Eigen::Map<Eigen::MatrixXd> dw1(ptr, model_.w1.rows(), model_.w1.cols());
    ptr += model_.w1.size();
    Eigen::Map<Eigen::VectorXd> db1(ptr, model_.b1.size());
    ptr += model_.b1.size();
    Eigen::Map<Eigen::MatrixXd> dw2(ptr, model_.w2.rows(), model_.w2.cols());
    ptr += model_.w2.size();
    Eigen::Map<Eigen::VectorXd> db2(ptr, model_.b2.size());

    dw1.noalias() = dh * x.transpose();
    db1 = dh;
    dw2.noalias() = dlogit * h.transpose();
    db2 = dlogit;
    return bce_from_probs(p, t);
}

Eigen::VectorXd MlpNet::predict_sample(int64_t sample) const {
    return mlp_probs(model_, features_->row(sample).transpose());
}

std::span<const uint8_t> MlpNet::sample_labels(int64_t sample) const {
    const auto& l = (*labels_)[static_cast<size_t>(sample)];
    return {l.data(), l.size()};
}

// ---------------------------------------------------------------------------

BaselineTrainResult train_lr(const Eigen::MatrixXd& features,
                             const std::vector<std::vector<uint8_t>>& labels,
                             std::span<const int64_t> train_idx,
                             std::span<const int64_t> val_idx, const TrainOptions& opt,
                             double l2) {
    if (features.rows() == 0) throw Error(ErrorCode::invalid, "train_lr: no rows");
    const int64_t c = labels.empty() ? 0 : static_cast<int64_t>(labels.front().size());
    LinearNet net(&features, &labels, LinearModel::zeros(features.cols(), c), l2);
    TrainLog log = run_training(net, train_idx, val_idx, opt);
    BaselineTrainResult r;
    r.kind = "lr";
    r.linear = std::move(net.model());
    r.history = std::move(log.history);
    r.best_epoch = log.best_epoch;
    return r;
}

BaselineTrainResult train_mlp(const Eigen::MatrixXd& features,
                              const std::vector<std::vector<uint8_t>>& labels,
                              std::span<const int64_t> train_idx,
                              std::span<const int64_t> val_idx, int hidden,
                              const TrainOptions& opt) {
    if (features.rows() == 0) throw Error(ErrorCode::invalid, "train_mlp: no rows");
    const int64_t c = labels.empty() ? 0 : static_cast<int64_t>(labels.front().size());
    MlpNet net(&features, &labels,
               MlpModel::glorot_init(features.cols(), c, hidden, opt.seed));
    TrainLog log = run_training(net, train_idx, val_idx, opt);
    BaselineTrainResult r;
    r.kind = "mlp";
    r.mlp = std::move(net.model());
    r.history = std::move(log.history);
    r.best_epoch = log.best_epoch;
    return r;
}

std::vector<Prediction> predict_linear(const LinearModel& m, const Eigen::MatrixXd& features,
                                       std::span<const int64_t> rows) {
    std::vector<Prediction> preds;
    preds.reserve(rows.size());
    for (int64_t r : rows) {
        preds.push_back(make_prediction(linear_probs(m, features.row(r).transpose())));
    }
    return preds;
}

std::vector<Prediction> predict_mlp(const MlpModel& m, const Eigen::MatrixXd& features,
                                    std::span<const int64_t> rows) {
    std::vector<Prediction> preds;
    preds.reserve(rows.size());
    for (int64_t r : rows) {
        preds.push_back(make_prediction(mlp_probs(m, features.row(r).transpose())));
    }
    return preds;
}

} // namespace berngraph
