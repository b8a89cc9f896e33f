#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "causalfuzz/dataset.hpp"

namespace causalfuzz {

enum class ScoreKind { probability, raw };

std::string to_string(ScoreKind kind);
ScoreKind score_kind_from_string(const std::string& s);

// Metered query budget. Charges serialize; an attempt that would exceed the
// budget fails without partial charge, so used() never exceeds budget() and
// is monotone non-decreasing.
class QueryMeter {
public:
    explicit QueryMeter(std::uint64_t budget) : budget_(budget) {}

    static QueryMeter unlimited() { return QueryMeter(std::numeric_limits<std::uint64_t>::max()); }

    std::uint64_t budget() const { return budget_; }
    std::uint64_t used() const;
    std::uint64_t remaining() const;

    // Two-phase charging: reserve before issuing queries, then commit on
    // success or release on failure. Failed calls charge nothing.
    bool try_reserve(std::uint64_t n);
    void commit(std::uint64_t n);
    void release(std::uint64_t n);

private:
    std::uint64_t budget_;
    std::uint64_t used_ = 0;
    std::uint64_t reserved_ = 0;
    mutable std::mutex mutex_;
};

// Black-box scoring interface. Implementations must depend only on the listed
// schema columns, in order, and return one score per input row.
class Predictor {
public:
    virtual ~Predictor() = default;

    virtual const std::vector<std::string>& schema() const = 0;
    virtual std::string id() const = 0;

    // Scores a batch, charging the meter by the batch size. Throws
    // BudgetExhausted (without charging) when the meter cannot cover it,
    // SchemaMismatch on row-width mismatch.
    virtual std::vector<double> predict(const std::vector<std::vector<double>>& rows,
                                        ScoreKind kind, QueryMeter& meter) const = 0;

    bool has_feature(const std::string& name) const;
};

struct TrainHyper {
    double learning_rate = 0.5;
    std::size_t iterations = 2000;
    double l2 = 1e-4;
};

// Logistic model over a fixed schema; probability = logistic(raw). Also the
// carrier for frozen hand-specified coefficients in oracle tests.
class LogisticModel : public Predictor {
public:
    LogisticModel(std::vector<std::string> schema, std::vector<double> weights,
                  double intercept, TrainHyper hyper = {}, std::uint64_t seed = 0,
                  std::string id = "");

    const std::vector<std::string>& schema() const override { return schema_; }
    std::string id() const override { return id_; }
    std::vector<double> predict(const std::vector<std::vector<double>>& rows,
                                ScoreKind kind, QueryMeter& meter) const override;

    const std::vector<double>& weights() const { return weights_; }
    double intercept() const { return intercept_; }
    const TrainHyper& hyper() const { return hyper_; }
    std::uint64_t seed() const { return seed_; }

    double raw_score(const std::vector<double>& row) const;

private:
    std::vector<std::string> schema_;
    std::vector<double> weights_;
    double intercept_;
    TrainHyper hyper_;
    std::uint64_t seed_;
    std::string id_;
};

// Full-batch gradient descent with L2 regularization; deterministic given
// seed. Outcome must be binary and non-degenerate, features finite, n >= 20.
std::shared_ptr<LogisticModel> train_builtin(const Dataset& data, const std::string& outcome,
                                             const std::vector<std::string>& features,
                                             const TrainHyper& hyper, std::uint64_t seed);

// Persistence: {"type":"logistic","schema","weights","intercept","hyper","seed"}.
std::string model_to_json(const LogisticModel& model);
std::shared_ptr<LogisticModel> parse_model(const std::string& text, const std::string& id = "");
std::shared_ptr<LogisticModel> load_model(const std::string& path);
void save_model(const LogisticModel& model, const std::string& path);

// Projects dataset rows onto the predictor's schema by column name.
std::vector<std::vector<double>> project_rows(const Dataset& data,
                                              const std::vector<std::string>& schema);

// Accuracy at threshold 0.5 against a labeled column.
double accuracy(const Predictor& p, const Dataset& data, const std::string& outcome);

}  // namespace causalfuzz
