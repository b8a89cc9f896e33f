#include <doctest.h>

#include <cmath>

#include "causalfuzz/errors.hpp"
#include "causalfuzz/predictor.hpp"
#include "causalfuzz/rng.hpp"

using namespace causalfuzz;

namespace {

Dataset separable_data(std::size_t n) {
    Dataset data;
    data.schema = {{"x", ColumnKind::continuous}, {"y", ColumnKind::binary}};
    Rng rng(41);
    for (std::size_t i = 0; i < n; ++i) {
        double x = rng.normal();
        data.rows.push_back({x, x > 0.0 ? 1.0 : 0.0});
    }
    return data;
}

}  // namespace

TEST_CASE("query meter reserve/commit/release contract") {
    QueryMeter meter(10);
    CHECK(meter.budget() == 10);
    CHECK(meter.remaining() == 10);
    CHECK(meter.try_reserve(6));
    CHECK(meter.remaining() == 4);
    CHECK_FALSE(meter.try_reserve(5));  // would exceed
    meter.commit(6);
    CHECK(meter.used() == 6);
    CHECK(meter.try_reserve(4));
    meter.release(4);  // failed call charges nothing
    CHECK(meter.used() == 6);
    CHECK(meter.remaining() == 4);
}

TEST_CASE("train: separable data reaches high accuracy") {
    auto data = separable_data(400);
    auto model = train_builtin(data, "y", {"x"}, {}, 1);
    CHECK(accuracy(*model, data, "y") >= 0.99);
}

TEST_CASE("train: independent outcome shrinks every weight") {
    Dataset data;
    data.schema = {{"a", ColumnKind::continuous},
                   {"b", ColumnKind::continuous},
                   {"y", ColumnKind::binary}};
    Rng rng(43);
    for (int i = 0; i < 10000; ++i) {
        data.rows.push_back({rng.normal(), rng.normal(), rng.bernoulli(0.5) ? 1.0 : 0.0});
    }
    auto model = train_builtin(data, "y", {"a", "b"}, {}, 2);
    for (double w : model->weights()) CHECK(std::fabs(w) < 0.1);
}

TEST_CASE("train: deterministic given data and seed") {
    auto data = separable_data(200);
    auto m1 = train_builtin(data, "y", {"x"}, {}, 7);
    auto m2 = train_builtin(data, "y", {"x"}, {}, 7);
    CHECK(m1->weights() == m2->weights());
    CHECK(m1->intercept() == m2->intercept());
}

TEST_CASE("train: error paths") {
    Dataset degenerate;
    degenerate.schema = {{"x", ColumnKind::continuous}, {"y", ColumnKind::binary}};
    for (int i = 0; i < 30; ++i) degenerate.rows.push_back({double(i), 1.0});
    CHECK_THROWS_AS(train_builtin(degenerate, "y", {"x"}, {}, 1), ConfigError);

    auto tiny = separable_data(10);
    CHECK_THROWS_AS(train_builtin(tiny, "y", {"x"}, {}, 1), ConfigError);

    auto data = separable_data(50);
    CHECK_THROWS_AS(train_builtin(data, "y", {"missing"}, {}, 1), ConfigError);
    CHECK_THROWS_AS(train_builtin(data, "y", {"y"}, {}, 1), ConfigError);
}

TEST_CASE("predict: empty batch leaves the meter untouched") {
    LogisticModel model({"a"}, {1.0}, 0.0);
    QueryMeter meter(5);
    CHECK(model.predict({}, ScoreKind::probability, meter).empty());
    CHECK(meter.used() == 0);
}

TEST_CASE("predict: zero weights give probability one half") {
    LogisticModel model({"a", "b"}, {0.0, 0.0}, 0.0);
    QueryMeter meter(10);
    auto scores = model.predict({{1.0, 2.0}, {-5.0, 3.0}}, ScoreKind::probability, meter);
    for (double s : scores) CHECK(s == 0.5);
    CHECK(meter.used() == 2);
}

TEST_CASE("predict: budget exhaustion charges nothing") {
    LogisticModel model({"a"}, {1.0}, 0.0);
    QueryMeter meter(10);
    std::vector<std::vector<double>> rows(11, std::vector<double>{1.0});
    CHECK_THROWS_AS(model.predict(rows, ScoreKind::raw, meter), BudgetExhausted);
    CHECK(meter.used() == 0);
    rows.resize(10);
    CHECK(model.predict(rows, ScoreKind::raw, meter).size() == 10);
    CHECK(meter.used() == 10);
    CHECK_THROWS_AS(model.predict({{1.0}}, ScoreKind::raw, meter), BudgetExhausted);
    CHECK(meter.used() == 10);
}

TEST_CASE("predict: schema mismatch rejected") {
    LogisticModel model({"a", "b"}, {1.0, 1.0}, 0.0);
    QueryMeter meter(10);
    std::vector<std::vector<double>> rows{{1.0}};
    CHECK_THROWS_AS(model.predict(rows, ScoreKind::raw, meter), SchemaMismatch);
    CHECK(meter.used() == 0);
}

TEST_CASE("probability equals logistic of raw") {
    LogisticModel model({"a"}, {0.7}, -0.2);
    QueryMeter meter = QueryMeter::unlimited();
    std::vector<std::vector<double>> rows{{0.3}, {-1.5}, {2.0}};
    auto raw = model.predict(rows, ScoreKind::raw, meter);
    auto prob = model.predict(rows, ScoreKind::probability, meter);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(prob[i] == doctest::Approx(1.0 / (1.0 + std::exp(-raw[i]))).epsilon(1e-12));
    }
}

TEST_CASE("model persistence round trip") {
    auto data = separable_data(100);
    TrainHyper hyper;
    hyper.learning_rate = 0.4;
    hyper.iterations = 500;
    hyper.l2 = 1e-3;
    auto model = train_builtin(data, "y", {"x"}, hyper, 9);
    auto text = model_to_json(*model);
    auto back = parse_model(text);
    CHECK(back->weights() == model->weights());
    CHECK(back->intercept() == model->intercept());
    CHECK(back->schema() == model->schema());
    CHECK(back->hyper().l2 == model->hyper().l2);
    CHECK(back->seed() == model->seed());
    CHECK(model_to_json(*back) == text);
    CHECK_THROWS_AS(parse_model("{bad"), ConfigError);
}

TEST_CASE("manual frozen-weight predictor") {
    // hand-specified coefficients act as the oracle model in closed-form tests
    auto manual = parse_model(R"({"type":"logistic","schema":["m"],"weights":[2.5],"intercept":0})");
    QueryMeter meter = QueryMeter::unlimited();
    auto scores = manual->predict({{1.0}}, ScoreKind::raw, meter);
    CHECK(scores[0] == 2.5);
}
