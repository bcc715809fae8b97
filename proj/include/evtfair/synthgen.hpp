#pragma once

#include "evtfair/tabular.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace evtfair {

// Source of synthetic records for one protected group. sample() must be a
// pure function of (n, seed).
class TabularGenerator {
public:
    virtual ~TabularGenerator() = default;
    virtual std::vector<Record> sample(std::size_t n, std::uint64_t seed) const = 0;
};

using GeneratorPtr = std::shared_ptr<const TabularGenerator>;

// Gaussian copula over the group's rows: empirical marginals tied together
// by the rank-based correlation of their normal scores.
class CopulaGenerator final : public TabularGenerator {
public:
    struct Marginal {
        std::size_t column = 0;
        ColumnKind kind = ColumnKind::Numeric;
        std::vector<double> sorted_values;       // numeric
        std::vector<std::string> categories;     // categorical, sorted
        std::vector<double> frequencies;         // parallel to categories, sums to 1
    };

    CopulaGenerator(Schema schema, std::size_t fixed_column, std::string target_value,
                    std::vector<Marginal> marginals, Eigen::MatrixXd correlation);

    std::vector<Record> sample(std::size_t n, std::uint64_t seed) const override;

    const Eigen::MatrixXd& correlation() const noexcept { return correlation_; }
    const std::vector<Marginal>& marginals() const noexcept { return marginals_; }
    const std::string& target_value() const noexcept { return target_; }

private:
    Schema schema_;
    std::size_t fixed_column_;
    std::string target_;
    std::vector<Marginal> marginals_;
    Eigen::MatrixXd correlation_;
    Eigen::MatrixXd factor_;  // factor_ * factor_^T == correlation_
};

CopulaGenerator fit_generator(const Dataset& train, const GroupSpec& group, const std::string& target_value);

// exp(-mean per-column KL(real || synth)); 1.0 means identical marginals.
double kl_similarity(const Dataset& real, const Dataset& synth);

// Frechet distance between Gaussian fits of the one-hot + standardized
// encodings (encoder fitted on the union of both inputs).
double frechet_distance(const Dataset& real, const Dataset& synth);

// Mean 5-fold ROC-AUC of a logistic regression separating real (1) from
// synthetic (0) rows. 0.5 means indistinguishable.
double detection_auc(const Dataset& real, const Dataset& synth, std::uint64_t seed);

// |F1(trained on real) - F1(trained on synthetic)| on the same test set.
double downstream_f1_loss(const Dataset& real_train, const Dataset& synth_train, const Dataset& test);

// Mann-Whitney ROC-AUC with average ranks for ties. Labels are 0/1.
double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels);

// Symmetric PSD square root with negative eigenvalues clamped to zero.
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m);

}  // namespace evtfair
