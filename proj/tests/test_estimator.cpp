#include <doctest.h>

#include <cmath>
#include <memory>

#include "causalfuzz/errors.hpp"
#include "causalfuzz/estimator.hpp"
#include "causalfuzz/predictor.hpp"
#include "causalfuzz/rng.hpp"
#include "causalfuzz/sem.hpp"
#include "causalfuzz/unlearn.hpp"

using namespace causalfuzz;

namespace {

// Noiseless linear fixture:
//   z -> m1 (a1), m1 -> m2 (a2), z -> m2 (a3), all of {z,m1,m2} -> y.
// With a frozen-weight linear raw-score model, every path effect has the
// closed form |delta * (product of SEM edge weights) * w_end|.
struct LinearFixture {
    static constexpr double a1 = 1.4, a2 = -0.7, a3 = 0.6;
    CausalGraph graph;
    Sem sem;
    Dataset data;
    std::shared_ptr<LogisticModel> model;

    explicit LinearFixture(std::vector<double> weights = {0.5, 1.1, -0.9})
        : graph({{"z", NodeRole::target, ColumnKind::continuous},
                 {"m1", NodeRole::feature, ColumnKind::continuous},
                 {"m2", NodeRole::feature, ColumnKind::continuous},
                 {"y", NodeRole::outcome, ColumnKind::continuous}},
                {{"z", "m1"},
                 {"m1", "m2"},
                 {"z", "m2"},
                 {"z", "y"},
                 {"m1", "y"},
                 {"m2", "y"}}),
          sem(graph,
              {{"m1", {"z"}, {a1}, 0.1, LinkKind::identity, 0.0, {}},
               {"m2", {"m1", "z"}, {a2, a3}, -0.3, LinkKind::identity, 0.0, {}}}),
          model(std::make_shared<LogisticModel>(std::vector<std::string>{"z", "m1", "m2"},
                                                std::move(weights), 0.2)) {
        data.schema = {{"z", ColumnKind::continuous},
                       {"m1", ColumnKind::continuous},
                       {"m2", ColumnKind::continuous}};
        Rng rng(71);
        for (int i = 0; i < 160; ++i) {
            data.rows.push_back({rng.normal(), rng.normal(), rng.normal()});
        }
    }

    FuzzConfig config(double delta = 0.7) const {
        FuzzConfig cfg;
        cfg.graph = &graph;
        cfg.sem = &sem;
        cfg.predictor = model;
        cfg.reference = &data;
        cfg.target = "z";
        cfg.threshold = 0.05;
        cfg.budget = 100000;
        cfg.top_k = 4;
        cfg.score_kind = ScoreKind::raw;
        cfg.contrast.mode = ContrastMode::fixed_delta;
        cfg.contrast.delta = delta;
        cfg.seed = 99;
        return cfg;
    }
};

}  // namespace

TEST_CASE("closed-form path effects on the linear fixture") {
    LinearFixture fx;
    auto cfg = fx.config(0.7);
    const double wz = 0.5, w1 = 1.1, w2 = -0.9;
    const double d = 0.7;

    struct Case {
        std::vector<std::string> path;
        double expect;
    };
    const Case cases[] = {
        {{"z", "y"}, std::fabs(d * wz)},
        {{"z", "m1", "y"}, std::fabs(d * LinearFixture::a1 * w1)},
        {{"z", "m2", "y"}, std::fabs(d * LinearFixture::a3 * w2)},
        {{"z", "m1", "m2", "y"}, std::fabs(d * LinearFixture::a1 * LinearFixture::a2 * w2)},
    };
    for (const auto& c : cases) {
        QueryMeter meter(100000);
        auto est = estimate_path_effect(cfg, c.path, 50, meter);
        CHECK(est.mean_abs_change == doctest::Approx(c.expect).epsilon(1e-9));
        CHECK(est.std_error < 1e-12);  // every pair is identical under fixed delta
        CHECK(est.n_pairs == 50);
        CHECK(est.status == EstimateStatus::ok);
        // dominance: the estimate never exceeds the closed form
        CHECK(est.mean_abs_change <= c.expect + 1e-6);
    }
}

TEST_CASE("total effect sums all routes; direct isolates the target") {
    LinearFixture fx;
    auto cfg = fx.config(1.0);
    const double wz = 0.5, w1 = 1.1, w2 = -0.9;
    // total raw-score change per unit z:
    //   wz + a1*w1 + (a3 + a1*a2)*w2
    const double expect_total =
        std::fabs(wz + LinearFixture::a1 * w1 +
                  (LinearFixture::a3 + LinearFixture::a1 * LinearFixture::a2) * w2);
    QueryMeter m1(100000);
    auto total = estimate_total_effect(cfg, 40, m1);
    CHECK(total.mean_abs_change == doctest::Approx(expect_total).epsilon(1e-9));

    QueryMeter m2(100000);
    auto direct = estimate_direct_effect(cfg, 40, m2);
    CHECK(direct.mean_abs_change == doctest::Approx(std::fabs(wz)).epsilon(1e-9));
    // two queries per pair minus original-score cache hits on repeated rows
    CHECK(direct.queries_used <= 2 * 40);
    CHECK(direct.queries_used > 40);
}

TEST_CASE("structurally null predictor measures exactly zero") {
    LinearFixture fx({0.0, 0.0, 0.0});
    auto cfg = fx.config();
    QueryMeter meter(100000);
    auto est = estimate_total_effect(cfg, 60, meter);
    CHECK(est.mean_abs_change == 0.0);
    CHECK(est.std_error == 0.0);
    CHECK(est.ci_low == 0.0);
    CHECK(est.ci_high == 0.0);
}

TEST_CASE("mediator-only weights: direct zero, total positive") {
    LinearFixture fx({0.0, 1.1, 0.0});  // weight only on m1
    auto cfg = fx.config(1.0);
    QueryMeter m1(100000);
    auto direct = estimate_direct_effect(cfg, 40, m1);
    CHECK(direct.status == EstimateStatus::ok);
    CHECK(direct.mean_abs_change == 0.0);
    QueryMeter m2(100000);
    auto total = estimate_total_effect(cfg, 40, m2);
    CHECK(total.mean_abs_change == doctest::Approx(LinearFixture::a1 * 1.1).epsilon(1e-9));
}

TEST_CASE("direct effect on an unlearned model is a structural zero with no queries") {
    LinearFixture fx;
    auto cfg = fx.config();
    auto unlearned = std::make_shared<LogisticModel>(std::vector<std::string>{"m1", "m2"},
                                                     std::vector<double>{1.0, 1.0}, 0.0);
    cfg.predictor = unlearned;
    QueryMeter meter(1000);
    auto est = estimate_direct_effect(cfg, 40, meter);
    CHECK(est.status == EstimateStatus::structural_zero);
    CHECK(est.queries_used == 0);
    CHECK(est.n_pairs == 0);
    CHECK(meter.used() == 0);
}

TEST_CASE("invalid paths and configs are rejected") {
    LinearFixture fx;
    auto cfg = fx.config();
    QueryMeter meter(1000);
    CHECK_THROWS_AS(estimate_path_effect(cfg, {"z", "m9", "y"}, 10, meter), ConfigError);
    CHECK_THROWS_AS(estimate_path_effect(cfg, {"m1", "y"}, 10, meter), ConfigError);
    CHECK_THROWS_AS(estimate_path_effect(cfg, {"z"}, 10, meter), ConfigError);

    auto bad = fx.config(0.0);  // null intervention policy
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    auto neg = fx.config();
    neg.threshold = 0.0;
    CHECK_THROWS_AS(neg.validate(), ConfigError);

    auto flip_cont = fx.config();
    flip_cont.contrast.mode = ContrastMode::flip;  // continuous target
    CHECK_THROWS_AS(flip_cont.validate(), ConfigError);
}

TEST_CASE("budget exhaustion mid-estimate returns a flagged partial result") {
    LinearFixture fx;
    auto cfg = fx.config();
    cfg.budget = 50;
    QueryMeter meter(50);
    auto est = estimate_total_effect(cfg, 200, meter);
    CHECK(est.status == EstimateStatus::budget_exhausted);
    CHECK(est.n_pairs < 200);
    CHECK(est.n_pairs > 0);
    CHECK(meter.used() <= 50);
    CHECK(est.queries_used <= 50);
    // the partial mean still matches the noiseless closed form
    CHECK(est.mean_abs_change > 0.0);
}

TEST_CASE("original-score cache halves repeated-row queries") {
    LinearFixture fx;
    auto cfg = fx.config();
    cfg.contrast.n_contrasts_per_row = 4;  // consecutive pairs share the sampled row
    QueryMeter meter(100000);
    auto est = estimate_total_effect(cfg, 80, meter);
    CHECK(est.n_pairs == 80);
    // 80 intervened queries plus at most 20 distinct originals
    CHECK(est.queries_used <= 80 + 20);
    CHECK(est.queries_used < 160);
}

TEST_CASE("subgroup predicate parsing and matching") {
    auto p = parse_subgroup_predicate("age<40");
    CHECK(p.column == "age");
    CHECK(p.op == "<");
    CHECK(p.value == 40.0);
    CHECK(p.matches(39.0));
    CHECK_FALSE(p.matches(40.0));
    CHECK(p.label() == "age<40");

    auto q = parse_subgroup_predicate("score>=0.5");
    CHECK(q.op == ">=");
    CHECK(q.matches(0.5));

    CHECK_THROWS_AS(parse_subgroup_predicate("age"), ConfigError);
    CHECK_THROWS_AS(parse_subgroup_predicate("<40"), ConfigError);
    CHECK_THROWS_AS(parse_subgroup_predicate("age<abc"), ConfigError);
}

TEST_CASE("subgroup matching all rows reproduces the global estimate") {
    LinearFixture fx;
    auto cfg = fx.config();
    SubgroupPredicate all{"z", ">=", -1e9};

    QueryMeter m1(100000);
    auto sub = estimate_subgroup_effects(cfg, all, 40, m1);
    REQUIRE(sub.size() >= 2);
    CHECK(sub[0].path_label == "TOTAL");
    CHECK(sub[0].subgroup_label.value() == all.label());

    QueryMeter m2(100000);
    auto global = estimate_total_effect(cfg, 40, m2);
    CHECK(sub[0].mean_abs_change == global.mean_abs_change);
    CHECK(sub[0].signed_mean == global.signed_mean);
    CHECK(sub[0].std_error == global.std_error);
}

TEST_CASE("subgroup below the row minimum is rejected") {
    LinearFixture fx;
    auto cfg = fx.config();
    SubgroupPredicate none{"z", ">", 1e9};
    QueryMeter meter(100000);
    CHECK_THROWS_AS(estimate_subgroup_effects(cfg, none, 40, meter), ConfigError);
}

TEST_CASE("marginal resample draws contrasts from the reference column") {
    LinearFixture fx;
    auto cfg = fx.config();
    cfg.contrast.mode = ContrastMode::marginal_resample;
    cfg.contrast.delta = 0.0;
    QueryMeter meter(100000);
    auto est = estimate_total_effect(cfg, 200, meter);
    CHECK(est.status == EstimateStatus::ok);
    CHECK(est.mean_abs_change > 0.0);  // resampled z values differ from observed
}

TEST_CASE("run_causal_fuzz: no path gives an empty pass outcome") {
    CausalGraph graph({{"z", NodeRole::target, ColumnKind::continuous},
                       {"q", NodeRole::feature, ColumnKind::continuous},
                       {"y", NodeRole::outcome, ColumnKind::continuous}},
                      {{"q", "y"}});
    Sem sem(graph, {{"q", {}, {}, 0.0, LinkKind::identity, 1.0, {}}});
    Dataset data;
    data.schema = {{"z", ColumnKind::continuous}, {"q", ColumnKind::continuous}};
    Rng rng(1);
    for (int i = 0; i < 40; ++i) data.rows.push_back({rng.normal(), rng.normal()});
    auto model = std::make_shared<LogisticModel>(std::vector<std::string>{"q"},
                                                 std::vector<double>{1.0}, 0.0);
    FuzzConfig cfg;
    cfg.graph = &graph;
    cfg.sem = &sem;
    cfg.predictor = model;
    cfg.reference = &data;
    cfg.target = "z";
    cfg.budget = 1000;
    cfg.contrast.mode = ContrastMode::marginal_resample;
    cfg.seed = 3;

    auto out = run_causal_fuzz(cfg);
    CHECK(out.no_path);
    CHECK(out.estimates.empty());
    CHECK(out.budget_used == 0);
}

TEST_CASE("run_causal_fuzz: budget below the floor is a config error before any query") {
    LinearFixture fx;
    auto cfg = fx.config();
    cfg.budget = 100;  // can't give TOTAL/DIRECT/paths 20 pairs each
    CHECK_THROWS_AS(run_causal_fuzz(cfg), ConfigError);
}

TEST_CASE("run_causal_fuzz: deterministic and budget-safe") {
    LinearFixture fx;
    auto cfg = fx.config();
    cfg.budget = 2000;
    auto a = run_causal_fuzz(cfg);
    auto b = run_causal_fuzz(cfg);
    REQUIRE(a.estimates.size() == b.estimates.size());
    for (std::size_t i = 0; i < a.estimates.size(); ++i) {
        CHECK(a.estimates[i].path_label == b.estimates[i].path_label);
        CHECK(a.estimates[i].mean_abs_change == b.estimates[i].mean_abs_change);
        CHECK(a.estimates[i].signed_mean == b.estimates[i].signed_mean);
        CHECK(a.estimates[i].queries_used == b.estimates[i].queries_used);
        CHECK(a.estimates[i].n_pairs == b.estimates[i].n_pairs);
    }
    CHECK(a.budget_used == b.budget_used);
    CHECK(a.budget_used <= cfg.budget);
    // TOTAL, DIRECT, then the four enumerated paths
    CHECK(a.estimates[0].path_label == "TOTAL");
    CHECK(a.estimates[1].path_label == "DIRECT");
    CHECK(a.ranked_paths.size() == 4);
}

TEST_CASE("run_causal_fuzz: subgroups are estimated on restricted rows") {
    LinearFixture fx;
    auto cfg = fx.config();
    cfg.budget = 6000;
    cfg.subgroups.push_back(parse_subgroup_predicate("z<0"));
    auto out = run_causal_fuzz(cfg);
    bool found = false;
    for (const auto& est : out.estimates) {
        if (est.subgroup_label && est.path_label == "TOTAL") {
            found = true;
            CHECK(est.subgroup_label.value() == "z<0");
            CHECK(est.n_pairs >= kMinPairs);
        }
    }
    CHECK(found);
    CHECK(out.budget_used <= cfg.budget);
}

TEST_CASE("property: CI width shrinks as one over sqrt n within a factor of two") {
    LinearFixture fx;
    auto cfg = fx.config();
    cfg.contrast.mode = ContrastMode::marginal_resample;  // pair-level variance
    std::vector<std::size_t> sizes{100, 400, 1600};
    std::vector<double> scaled;
    for (std::size_t n : sizes) {
        QueryMeter meter(100000);
        auto est = estimate_total_effect(cfg, n, meter);
        double width = est.ci_high - est.ci_low;
        scaled.push_back(width * std::sqrt(static_cast<double>(n)));
    }
    double lo = *std::min_element(scaled.begin(), scaled.end());
    double hi = *std::max_element(scaled.begin(), scaled.end());
    CHECK(hi / lo < 2.0);
}

TEST_CASE("null soundness: zero-dependence predictor CIs always cover zero") {
    LinearFixture fx({0.0, 0.0, 0.0});
    auto cfg = fx.config();
    cfg.contrast.mode = ContrastMode::marginal_resample;
    std::size_t covered = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        cfg.seed = seed;
        QueryMeter meter(100000);
        auto est = estimate_total_effect(cfg, 50, meter);
        if (est.ci_low <= 0.0 && 0.0 <= est.ci_high) ++covered;
    }
    CHECK(covered == 20);
}
