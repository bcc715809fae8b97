#pragma once

#include "evtfair/tabular.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

namespace evtfair {

// Anything mapping a record to a favorable-outcome probability in [0, 1].
// Implementations must be safe to call concurrently.
class ScoreModel {
public:
    virtual ~ScoreModel() = default;
    virtual std::vector<double> score(std::span<const Record> rows) const = 0;
    virtual std::string id() const = 0;
};

using ModelPtr = std::shared_ptr<const ScoreModel>;

// One-hot for categorical columns (unseen values map to all zeros) and
// z-scores for numeric columns, both fitted on training rows.
class FeatureEncoder {
public:
    struct Slot {
        std::size_t column = 0;
        ColumnKind kind = ColumnKind::Numeric;
        double mean = 0.0;
        double stddev = 0.0;
        std::vector<std::string> categories;
    };

    FeatureEncoder() = default;
    // Fits on every column except those listed in `skip`.
    static FeatureEncoder fit(const Schema& schema, std::span<const Record> rows,
                              const std::vector<std::size_t>& skip);
    // Fits on the features of a model: all columns but the label.
    static FeatureEncoder fit_features(const Dataset& ds);

    std::size_t width() const noexcept { return width_; }
    const std::vector<Slot>& slots() const noexcept { return slots_; }
    void encode_into(const Record& row, double* out) const;
    Eigen::MatrixXd encode(std::span<const Record> rows) const;

private:
    std::vector<Slot> slots_;
    std::size_t width_ = 0;
};

struct TrainConfig {
    double learning_rate = 0.1;
    double l2 = 1e-3;
    int epochs = 100;
    double class_weight = 1.0;
    // Initial weights are zero; the seed is carried so configurations
    // round-trip through reports unchanged.
    std::uint64_t seed = 0;

    void validate() const;
    bool operator==(const TrainConfig&) const = default;
};

struct LogisticSolution {
    Eigen::VectorXd weights;
    double bias = 0.0;
    std::vector<double> loss_history;  // objective before each epoch, plus the final value
};

// Full-batch gradient descent on the class-weighted, L2-regularized mean
// log-loss. Labels are 0/1; positives carry cfg.class_weight.
LogisticSolution fit_logistic(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const TrainConfig& cfg);

class LogRegModel final : public ScoreModel {
public:
    LogRegModel(Schema schema, FeatureEncoder encoder, LogisticSolution solution);

    std::vector<double> score(std::span<const Record> rows) const override;
    std::string id() const override { return "builtin:logreg"; }

    const FeatureEncoder& encoder() const noexcept { return encoder_; }
    const Eigen::VectorXd& weights() const noexcept { return solution_.weights; }
    double bias() const noexcept { return solution_.bias; }
    const std::vector<double>& loss_history() const noexcept { return solution_.loss_history; }

private:
    Schema schema_;
    FeatureEncoder encoder_;
    LogisticSolution solution_;
};

class ConstantModel final : public ScoreModel {
public:
    explicit ConstantModel(double probability);
    std::vector<double> score(std::span<const Record> rows) const override;
    std::string id() const override;
    double probability() const noexcept { return p_; }

private:
    double p_;
};

// Wraps an in-process scoring function; results are clamped to [0, 1].
class FunctionModel final : public ScoreModel {
public:
    using Fn = std::function<double(const Record&)>;
    FunctionModel(std::string id, Fn fn) : id_(std::move(id)), fn_(std::move(fn)) {}
    std::vector<double> score(std::span<const Record> rows) const override;
    std::string id() const override { return id_; }

private:
    std::string id_;
    Fn fn_;
};

// Batch protocol: the command receives a CSV (header, no label column) on
// stdin and must print one probability per row on stdout.
class ExternalModel final : public ScoreModel {
public:
    ExternalModel(std::string command, Schema schema);
    std::vector<double> score(std::span<const Record> rows) const override;
    std::string id() const override { return "exec:" + command_; }

private:
    std::string command_;
    Schema schema_;
    mutable std::mutex mutex_;
};

// Returns a LogRegModel, or a ConstantModel with the empirical favorable
// rate when only one class is present.
ModelPtr train_logreg(const Dataset& train, const TrainConfig& cfg);

std::vector<double> score(const ScoreModel& model, std::span<const Record> rows);

struct Classification {
    double accuracy = 0.0;
    double f1 = 0.0;
};

Classification evaluate(const ScoreModel& model, const Dataset& test);
// Same metrics from precomputed scores.
Classification evaluate_scores(const Dataset& test, std::span<const double> scores);

double sigmoid(double z) noexcept;

}  // namespace evtfair
