#include "evtfair/scoring.hpp"

#include "evtfair/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

namespace evtfair {

double sigmoid(double z) noexcept {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

FeatureEncoder FeatureEncoder::fit(const Schema& schema, std::span<const Record> rows,
                                   const std::vector<std::size_t>& skip) {
    FeatureEncoder enc;
    for (std::size_t c = 0; c < schema.size(); ++c) {
        if (std::find(skip.begin(), skip.end(), c) != skip.end()) continue;
        Slot slot;
        slot.column = c;
        slot.kind = schema.columns()[c].kind;
        if (slot.kind == ColumnKind::Numeric) {
            double sum = 0.0;
            for (const auto& r : rows) sum += std::get<double>(r[c]);
            slot.mean = rows.empty() ? 0.0 : sum / static_cast<double>(rows.size());
            double ss = 0.0;
            for (const auto& r : rows) {
                const double d = std::get<double>(r[c]) - slot.mean;
                ss += d * d;
            }
            slot.stddev = rows.empty() ? 0.0 : std::sqrt(ss / static_cast<double>(rows.size()));
            enc.width_ += 1;
        } else {
            for (const auto& r : rows) {
                const auto& s = std::get<std::string>(r[c]);
                if (std::find(slot.categories.begin(), slot.categories.end(), s) == slot.categories.end())
                    slot.categories.push_back(s);
            }
            std::sort(slot.categories.begin(), slot.categories.end());
            enc.width_ += slot.categories.size();
        }
        enc.slots_.push_back(std::move(slot));
    }
    return enc;
}

FeatureEncoder FeatureEncoder::fit_features(const Dataset& ds) {
    return fit(ds.schema(), ds.rows(), {ds.schema().label_index()});
}

void FeatureEncoder::encode_into(const Record& row, double* out) const {
    std::size_t pos = 0;
    for (const auto& slot : slots_) {
        if (slot.kind == ColumnKind::Numeric) {
            const auto* v = std::get_if<double>(&row.at(slot.column));
            if (v == nullptr) fail(ErrorCode::SchemaMismatch, "expected numeric value");
            out[pos++] = slot.stddev > 0.0 ? (*v - slot.mean) / slot.stddev : 0.0;
        } else {
            const auto* v = std::get_if<std::string>(&row.at(slot.column));
            if (v == nullptr) fail(ErrorCode::SchemaMismatch, "expected categorical value");
            const auto it = std::lower_bound(slot.categories.begin(), slot.categories.end(), *v);
            for (std::size_t k = 0; k < slot.categories.size(); ++k) out[pos + k] = 0.0;
            if (it != slot.categories.end() && *it == *v)
                out[pos + static_cast<std::size_t>(it - slot.categories.begin())] = 1.0;
            pos += slot.categories.size();
        }
    }
}

Eigen::MatrixXd FeatureEncoder::encode(std::span<const Record> rows) const {
    // Row-major scratch so each record writes contiguously.
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> x(
        static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width_));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (width_ > 0) encode_into(rows[i], x.row(static_cast<Eigen::Index>(i)).data());
    }
    return x;
}

void TrainConfig::validate() const {
    if (!(learning_rate > 0) || !std::isfinite(learning_rate))
        fail(ErrorCode::InvalidArgument, "learning_rate must be positive");
    if (!(l2 >= 0) || !std::isfinite(l2)) fail(ErrorCode::InvalidArgument, "l2 must be nonnegative");
    if (epochs <= 0) fail(ErrorCode::InvalidArgument, "epochs must be positive");
    if (!(class_weight > 0) || !std::isfinite(class_weight))
        fail(ErrorCode::InvalidArgument, "class_weight must be positive");
}

namespace {

double log1pexp(double z) noexcept { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double objective(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& sw,
                 const Eigen::VectorXd& w, double b, double l2) {
    const Eigen::VectorXd z = (x * w).array() + b;
    double loss = 0.0;
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        // -[y log s(z) + (1-y) log(1-s(z))] = log(1+e^z) - y z
        loss += sw[i] * (log1pexp(z[i]) - y[i] * z[i]);
    }
    return loss / static_cast<double>(z.size()) + 0.5 * l2 * w.squaredNorm();
}

}  // namespace

LogisticSolution fit_logistic(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const TrainConfig& cfg) {
    cfg.validate();
    const auto n = x.rows();
    if (n == 0) fail(ErrorCode::EmptyDataset, "no training rows");
    Eigen::VectorXd sw(n);
    for (Eigen::Index i = 0; i < n; ++i) sw[i] = y[i] > 0.5 ? cfg.class_weight : 1.0;

    LogisticSolution sol;
    sol.weights = Eigen::VectorXd::Zero(x.cols());
    sol.bias = 0.0;
    sol.loss_history.reserve(static_cast<std::size_t>(cfg.epochs) + 1);
    const double inv_n = 1.0 / static_cast<double>(n);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        sol.loss_history.push_back(objective(x, y, sw, sol.weights, sol.bias, cfg.l2));
        Eigen::VectorXd residual = (x * sol.weights).array() + sol.bias;
        for (Eigen::Index i = 0; i < n; ++i) residual[i] = sw[i] * (sigmoid(residual[i]) - y[i]);
        const Eigen::VectorXd grad_w = inv_n * (x.transpose() * residual) + cfg.l2 * sol.weights;
        const double grad_b = inv_n * residual.sum();
        sol.weights -= cfg.learning_rate * grad_w;
        sol.bias -= cfg.learning_rate * grad_b;
    }
    sol.loss_history.push_back(objective(x, y, sw, sol.weights, sol.bias, cfg.l2));
    if (!sol.weights.allFinite() || !std::isfinite(sol.bias))
        fail(ErrorCode::FitDiverged, "logistic regression weights are not finite");
    return sol;
}

LogRegModel::LogRegModel(Schema schema, FeatureEncoder encoder, LogisticSolution solution)
    : schema_(std::move(schema)), encoder_(std::move(encoder)), solution_(std::move(solution)) {}

std::vector<double> LogRegModel::score(std::span<const Record> rows) const {
    std::vector<double> out(rows.size());
    std::vector<double> buf(encoder_.width());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != schema_.size()) fail(ErrorCode::SchemaMismatch, "record width differs from schema");
        encoder_.encode_into(rows[i], buf.data());
        double z = solution_.bias;
        for (std::size_t k = 0; k < buf.size(); ++k) z += solution_.weights[static_cast<Eigen::Index>(k)] * buf[k];
        out[i] = sigmoid(z);
    }
    return out;
}

ConstantModel::ConstantModel(double probability) : p_(probability) {
    if (!(probability >= 0.0 && probability <= 1.0))
        fail(ErrorCode::InvalidArgument, "constant probability outside [0,1]");
}

std::vector<double> ConstantModel::score(std::span<const Record> rows) const {
    return std::vector<double>(rows.size(), p_);
}

std::string ConstantModel::id() const {
    char buf[48];
    std::snprintf(buf, sizeof buf, "constant:%.17g", p_);
    return buf;
}

std::vector<double> FunctionModel::score(std::span<const Record> rows) const {
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(std::clamp(fn_(r), 0.0, 1.0));
    return out;
}

ExternalModel::ExternalModel(std::string command, Schema schema)
    : command_(std::move(command)), schema_(std::move(schema)) {
    if (command_.empty()) fail(ErrorCode::InvalidArgument, "external model command is empty");
}

std::vector<double> ExternalModel::score(std::span<const Record> rows) const {
    std::lock_guard lock(mutex_);
    if (rows.empty()) return {};
    for (const auto& r : rows)
        if (r.size() != schema_.size()) fail(ErrorCode::SchemaMismatch, "record width differs from schema");

    // The batch goes through a temporary file so large inputs cannot
    // deadlock against the child's output pipe.
    std::string tmpl = (std::filesystem::temp_directory_path() / "evtfair-batch-XXXXXX").string();
    const int fd = ::mkstemp(tmpl.data());
    if (fd < 0) fail(ErrorCode::ExternalModelFailure, "cannot create temporary batch file");
    ::close(fd);
    struct Cleanup {
        std::string path;
        ~Cleanup() { std::remove(path.c_str()); }
    } cleanup{tmpl};
    {
        std::ofstream out(tmpl, std::ios::binary);
        write_feature_csv(out, schema_, std::vector<Record>(rows.begin(), rows.end()));
        if (!out) fail(ErrorCode::ExternalModelFailure, "cannot write batch file");
    }

    const std::string cmd = "(" + command_ + ") < '" + tmpl + "'";
    FILE* pipe = ::popen(cmd.c_str(), "r");
    if (pipe == nullptr) fail(ErrorCode::ExternalModelFailure, "cannot spawn '" + command_ + "'");
    std::string output;
    std::array<char, 4096> chunk{};
    std::size_t got = 0;
    while ((got = std::fread(chunk.data(), 1, chunk.size(), pipe)) > 0) output.append(chunk.data(), got);
    const int status = ::pclose(pipe);
    if (status != 0) fail(ErrorCode::ExternalModelFailure, "command exited with status " + std::to_string(status));

    std::vector<double> probs;
    std::istringstream lines(output);
    std::string line;
    while (std::getline(lines, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        char* end = nullptr;
        const double p = std::strtod(line.c_str(), &end);
        while (end != nullptr && (*end == ' ' || *end == '\t')) ++end;
        if (end == line.c_str() || (end != nullptr && *end != '\0') || !std::isfinite(p) || p < 0.0 || p > 1.0)
            fail(ErrorCode::ExternalModelFailure, "malformed probability '" + line + "'");
        probs.push_back(p);
    }
    if (probs.size() != rows.size())
        fail(ErrorCode::ExternalModelFailure, "expected " + std::to_string(rows.size()) + " probabilities, got " +
                                                  std::to_string(probs.size()));
    return probs;
}

ModelPtr train_logreg(const Dataset& train, const TrainConfig& cfg) {
    if (train.empty()) fail(ErrorCode::EmptyDataset, "training set is empty");
    cfg.validate();
    Eigen::VectorXd y(static_cast<Eigen::Index>(train.size()));
    std::size_t positives = 0;
    for (std::size_t i = 0; i < train.size(); ++i) {
        const bool fav = train.is_favorable(train.rows()[i]);
        y[static_cast<Eigen::Index>(i)] = fav ? 1.0 : 0.0;
        positives += fav ? 1 : 0;
    }
    if (positives == 0 || positives == train.size())
        return std::make_shared<ConstantModel>(static_cast<double>(positives) / static_cast<double>(train.size()));

    auto encoder = FeatureEncoder::fit_features(train);
    const Eigen::MatrixXd x = encoder.encode(train.rows());
    auto sol = fit_logistic(x, y, cfg);
    return std::make_shared<LogRegModel>(train.schema(), std::move(encoder), std::move(sol));
}

std::vector<double> score(const ScoreModel& model, std::span<const Record> rows) {
    auto out = model.score(rows);
    if (out.size() != rows.size())
        fail(ErrorCode::ExternalModelFailure, "model returned wrong number of scores");
    for (double p : out)
        if (!(p >= 0.0 && p <= 1.0)) fail(ErrorCode::ExternalModelFailure, "score outside [0,1]");
    return out;
}

Classification evaluate_scores(const Dataset& test, std::span<const double> scores) {
    if (test.empty()) fail(ErrorCode::EmptyDataset, "test set is empty");
    std::size_t correct = 0, tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < test.size(); ++i) {
        const bool predicted = scores[i] >= 0.5;
        const bool actual = test.is_favorable(test.rows()[i]);
        correct += predicted == actual ? 1 : 0;
        tp += predicted && actual ? 1 : 0;
        fp += predicted && !actual ? 1 : 0;
        fn += !predicted && actual ? 1 : 0;
    }
    Classification c;
    c.accuracy = static_cast<double>(correct) / static_cast<double>(test.size());
    const std::size_t denom = 2 * tp + fp + fn;
    c.f1 = denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
    return c;
}

Classification evaluate(const ScoreModel& model, const Dataset& test) {
    if (test.empty()) fail(ErrorCode::EmptyDataset, "test set is empty");
    const auto s = score(model, test.rows());
    return evaluate_scores(test, s);
}

}  // namespace evtfair
