#include "causalfuzz/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "causalfuzz/errors.hpp"

namespace causalfuzz {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace

std::string to_string(ScoreKind kind) {
    return kind == ScoreKind::raw ? "raw" : "probability";
}

ScoreKind score_kind_from_string(const std::string& s) {
    if (s == "probability") return ScoreKind::probability;
    if (s == "raw") return ScoreKind::raw;
    throw ConfigError("unknown score kind: " + s);
}

std::uint64_t QueryMeter::used() const {
    std::lock_guard lock(mutex_);
    return used_;
}

std::uint64_t QueryMeter::remaining() const {
    std::lock_guard lock(mutex_);
    return budget_ - used_ - reserved_;
}

bool QueryMeter::try_reserve(std::uint64_t n) {
    std::lock_guard lock(mutex_);
    if (used_ + reserved_ + n > budget_) return false;
    reserved_ += n;
    return true;
}

void QueryMeter::commit(std::uint64_t n) {
    std::lock_guard lock(mutex_);
    reserved_ -= std::min(reserved_, n);
    used_ += n;
}

void QueryMeter::release(std::uint64_t n) {
    std::lock_guard lock(mutex_);
    reserved_ -= std::min(reserved_, n);
}

bool Predictor::has_feature(const std::string& name) const {
    const auto& s = schema();
    return std::find(s.begin(), s.end(), name) != s.end();
}

LogisticModel::LogisticModel(std::vector<std::string> schema, std::vector<double> weights,
                             double intercept, TrainHyper hyper, std::uint64_t seed,
                             std::string id)
    : schema_(std::move(schema)),
      weights_(std::move(weights)),
      intercept_(intercept),
      hyper_(hyper),
      seed_(seed),
      id_(std::move(id)) {
    if (weights_.size() != schema_.size()) {
        throw ConfigError("model has " + std::to_string(weights_.size()) + " weights for " +
                          std::to_string(schema_.size()) + " features");
    }
    if (id_.empty()) id_ = "builtin";
}

double LogisticModel::raw_score(const std::vector<double>& row) const {
    double z = intercept_;
    for (std::size_t j = 0; j < weights_.size(); ++j) z += weights_[j] * row[j];
    return z;
}

std::vector<double> LogisticModel::predict(const std::vector<std::vector<double>>& rows,
                                           ScoreKind kind, QueryMeter& meter) const {
    for (const auto& row : rows) {
        if (row.size() != schema_.size()) {
            throw SchemaMismatch("row has " + std::to_string(row.size()) +
                                 " values, schema expects " + std::to_string(schema_.size()));
        }
    }
    if (rows.empty()) return {};
    if (!meter.try_reserve(rows.size())) {
        throw BudgetExhausted("query budget exhausted: need " + std::to_string(rows.size()) +
                              ", remaining " + std::to_string(meter.remaining()));
    }
    std::vector<double> scores;
    scores.reserve(rows.size());
    for (const auto& row : rows) {
        double z = raw_score(row);
        scores.push_back(kind == ScoreKind::raw ? z : sigmoid(z));
    }
    meter.commit(rows.size());
    return scores;
}

std::shared_ptr<LogisticModel> train_builtin(const Dataset& data, const std::string& outcome,
                                             const std::vector<std::string>& features,
                                             const TrainHyper& hyper, std::uint64_t seed) {
    const std::size_t n = data.n_rows();
    if (n < 20) throw ConfigError("train_builtin: need at least 20 rows, got " + std::to_string(n));
    if (features.empty()) throw ConfigError("train_builtin: no features given");

    const std::size_t y_idx = data.column_index(outcome);
    std::vector<std::size_t> f_idx;
    for (const auto& f : features) {
        if (f == outcome) throw ConfigError("outcome cannot also be a feature: " + f);
        f_idx.push_back(data.column_index(f));
    }

    bool any_zero = false, any_one = false;
    for (const auto& row : data.rows) {
        double y = row[y_idx];
        if (y == 0.0) any_zero = true;
        else if (y == 1.0) any_one = true;
        else throw ConfigError("train_builtin: outcome must be binary 0/1");
        for (std::size_t idx : f_idx) {
            if (!std::isfinite(row[idx])) throw ConfigError("train_builtin: non-finite feature value");
        }
    }
    if (!any_zero || !any_one) {
        throw ConfigError("train_builtin: degenerate outcome (single class)");
    }

    const std::size_t p = features.size();
    std::vector<double> mean(p, 0.0), sd(p, 0.0);
    for (const auto& row : data.rows) {
        for (std::size_t j = 0; j < p; ++j) mean[j] += row[f_idx[j]];
    }
    for (std::size_t j = 0; j < p; ++j) mean[j] /= static_cast<double>(n);
    for (const auto& row : data.rows) {
        for (std::size_t j = 0; j < p; ++j) {
            double d = row[f_idx[j]] - mean[j];
            sd[j] += d * d;
        }
    }
    for (std::size_t j = 0; j < p; ++j) {
        sd[j] = std::sqrt(sd[j] / static_cast<double>(n));
        if (sd[j] == 0.0) sd[j] = 1.0;
    }

    // Gradient descent on standardized columns; step fixed per fit via the
    // logistic Hessian trace bound so the user learning rate stays scale-free.
    const double step = hyper.learning_rate / (0.25 * static_cast<double>(p + 1));
    std::vector<double> w(p, 0.0);
    double b = 0.0;
    std::vector<double> grad(p);
    for (std::size_t iter = 0; iter < hyper.iterations; ++iter) {
        std::fill(grad.begin(), grad.end(), 0.0);
        double grad_b = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double z = b;
            const auto& row = data.rows[i];
            for (std::size_t j = 0; j < p; ++j) z += w[j] * (row[f_idx[j]] - mean[j]) / sd[j];
            double err = sigmoid(z) - row[y_idx];
            for (std::size_t j = 0; j < p; ++j) grad[j] += err * (row[f_idx[j]] - mean[j]) / sd[j];
            grad_b += err;
        }
        double inf_norm = std::fabs(grad_b) / static_cast<double>(n);
        for (std::size_t j = 0; j < p; ++j) {
            grad[j] = grad[j] / static_cast<double>(n) + hyper.l2 * w[j];
            inf_norm = std::max(inf_norm, std::fabs(grad[j]));
        }
        if (inf_norm < 1e-9) break;  // converged early; deterministic either way
        for (std::size_t j = 0; j < p; ++j) w[j] -= step * grad[j];
        b -= step * grad_b / static_cast<double>(n);
    }

    std::vector<double> weights(p);
    double intercept = b;
    for (std::size_t j = 0; j < p; ++j) {
        weights[j] = w[j] / sd[j];
        intercept -= w[j] * mean[j] / sd[j];
    }
    return std::make_shared<LogisticModel>(features, std::move(weights), intercept, hyper, seed);
}

std::string model_to_json(const LogisticModel& model) {
    nlohmann::ordered_json j;
    j["type"] = "logistic";
    j["schema"] = model.schema();
    j["weights"] = model.weights();
    j["intercept"] = model.intercept();
    j["hyper"] = {{"learning_rate", model.hyper().learning_rate},
                  {"iterations", model.hyper().iterations},
                  {"l2", model.hyper().l2}};
    j["seed"] = model.seed();
    return j.dump(2) + "\n";
}

std::shared_ptr<LogisticModel> parse_model(const std::string& text, const std::string& id) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("model file syntax error at byte " + std::to_string(e.byte) + ": " +
                          e.what());
    }
    if (j.value("type", "logistic") != "logistic") {
        throw ConfigError("unsupported model type: " + j["type"].get<std::string>());
    }
    std::vector<std::string> schema;
    for (const auto& s : j.at("schema")) schema.push_back(s.get<std::string>());
    std::vector<double> weights;
    for (const auto& w : j.at("weights")) weights.push_back(w.get<double>());
    double intercept = j.at("intercept").get<double>();
    TrainHyper hyper;
    if (j.contains("hyper")) {
        hyper.learning_rate = j["hyper"].value("learning_rate", hyper.learning_rate);
        hyper.iterations = j["hyper"].value("iterations", hyper.iterations);
        hyper.l2 = j["hyper"].value("l2", hyper.l2);
    }
    std::uint64_t seed = j.value("seed", std::uint64_t{0});
    return std::make_shared<LogisticModel>(std::move(schema), std::move(weights), intercept,
                                           hyper, seed, id);
}

std::shared_ptr<LogisticModel> load_model(const std::string& path) {
    return parse_model(read_file(path), path);
}

void save_model(const LogisticModel& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write file: " + path);
    out << model_to_json(model);
}

std::vector<std::vector<double>> project_rows(const Dataset& data,
                                              const std::vector<std::string>& schema) {
    std::vector<std::size_t> idx;
    idx.reserve(schema.size());
    for (const auto& name : schema) idx.push_back(data.column_index(name));
    std::vector<std::vector<double>> out;
    out.reserve(data.n_rows());
    for (const auto& row : data.rows) {
        std::vector<double> projected(schema.size());
        for (std::size_t j = 0; j < schema.size(); ++j) projected[j] = row[idx[j]];
        out.push_back(std::move(projected));
    }
    return out;
}

double accuracy(const Predictor& p, const Dataset& data, const std::string& outcome) {
    auto rows = project_rows(data, p.schema());
    auto meter = QueryMeter::unlimited();
    auto scores = p.predict(rows, ScoreKind::probability, meter);
    const std::size_t y_idx = data.column_index(outcome);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        double pred = scores[i] >= 0.5 ? 1.0 : 0.0;
        if (pred == data.rows[i][y_idx]) ++correct;
    }
    return data.n_rows() == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(data.n_rows());
}

}  // namespace causalfuzz
