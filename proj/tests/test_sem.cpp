#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "causalfuzz/errors.hpp"
#include "causalfuzz/rng.hpp"
#include "causalfuzz/sem.hpp"

using namespace causalfuzz;

namespace {

CausalGraph chain_graph() {
    // Z -> M -> F, with a detached outcome node so the graph validates
    return CausalGraph({{"Z", NodeRole::target, ColumnKind::continuous},
                        {"M", NodeRole::feature, ColumnKind::continuous},
                        {"F", NodeRole::feature, ColumnKind::continuous},
                        {"Y", NodeRole::outcome, ColumnKind::continuous}},
                       {{"Z", "M"}, {"M", "F"}});
}

CausalGraph triangle_graph() {
    return CausalGraph({{"Z", NodeRole::target, ColumnKind::continuous},
                        {"M", NodeRole::feature, ColumnKind::continuous},
                        {"F", NodeRole::feature, ColumnKind::continuous},
                        {"Y", NodeRole::outcome, ColumnKind::continuous}},
                       {{"Z", "M"}, {"M", "F"}, {"Z", "F"}});
}

double column_corr(const Dataset& d, const std::string& a, const std::string& b) {
    auto ca = d.column(a);
    auto cb = d.column(b);
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < ca.size(); ++i) {
        ma += ca[i];
        mb += cb[i];
    }
    ma /= static_cast<double>(ca.size());
    mb /= static_cast<double>(cb.size());
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < ca.size(); ++i) {
        sab += (ca[i] - ma) * (cb[i] - mb);
        saa += (ca[i] - ma) * (ca[i] - ma);
        sbb += (cb[i] - mb) * (cb[i] - mb);
    }
    return sab / std::sqrt(saa * sbb);
}

// Independent oracle: full forward re-simulation with residuals held fixed.
std::vector<double> naive_resimulate(const Sem& sem, const std::vector<double>& row,
                                     const std::string& target, double z_new) {
    auto order = feature_order(sem);
    std::map<std::string, std::size_t> idx;
    for (std::size_t i = 0; i < order.size(); ++i) idx[order[i]] = i;

    std::map<std::string, double> residual;
    for (const auto& node : order) {
        if (!sem.has_equation(node)) continue;
        const auto& eq = sem.equation(node);
        std::vector<double> parents(eq.parent_names.size());
        for (std::size_t j = 0; j < parents.size(); ++j) {
            parents[j] = row[idx.at(eq.parent_names[j])];
        }
        double pred = eq.link == LinkKind::logistic ? eq.mean(parents) : eq.linear(parents);
        residual[node] = row[idx.at(node)] - pred;
    }

    std::vector<double> out = row;
    for (const auto& node : order) {
        if (node == target) {
            out[idx.at(node)] = z_new;
            continue;
        }
        if (!sem.has_equation(node)) continue;
        const auto& eq = sem.equation(node);
        std::vector<double> parents(eq.parent_names.size());
        for (std::size_t j = 0; j < parents.size(); ++j) {
            parents[j] = out[idx.at(eq.parent_names[j])];
        }
        if (eq.link == LinkKind::logistic) {
            out[idx.at(node)] = (eq.mean(parents) + residual.at(node) >= 0.5) ? 1.0 : 0.0;
        } else {
            out[idx.at(node)] = eq.linear(parents) + residual.at(node);
        }
    }
    return out;
}

std::set<Edge> all_edges(const CausalGraph& g) {
    return {g.edges().begin(), g.edges().end()};
}

}  // namespace

TEST_CASE("fit_sem: noiseless linear recovery") {
    auto g = chain_graph();
    Dataset data;
    data.schema = {{"Z", ColumnKind::continuous},
                   {"M", ColumnKind::continuous},
                   {"F", ColumnKind::continuous}};
    Rng rng(11);
    for (int i = 0; i < 200; ++i) {
        double z = rng.normal();
        double m = 2.0 * z;
        data.rows.push_back({z, m, -0.5 * m + 1.0});
    }
    auto sem = fit_sem(g, data);
    CHECK_FALSE(sem.has_equation("Z"));  // root stays exogenous
    const auto& eq = sem.equation("M");
    CHECK(eq.weights[0] == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(eq.intercept == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(eq.residual_scale < 1e-7);
    const auto& eqf = sem.equation("F");
    CHECK(eqf.weights[0] == doctest::Approx(-0.5).epsilon(1e-9));
    CHECK(eqf.intercept == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("fit_sem: noisy fit matches the closed-form OLS oracle") {
    auto g = CausalGraph({{"Z", NodeRole::target, ColumnKind::continuous},
                          {"M", NodeRole::feature, ColumnKind::continuous},
                          {"Y", NodeRole::outcome, ColumnKind::continuous}},
                         {{"Z", "M"}});
    Dataset data;
    data.schema = {{"Z", ColumnKind::continuous}, {"M", ColumnKind::continuous}};
    Rng rng(17);
    const std::size_t n = 10000;
    for (std::size_t i = 0; i < n; ++i) {
        double z = rng.normal();
        data.rows.push_back({z, 0.8 * z + 0.5 * rng.normal()});
    }
    auto sem = fit_sem(g, data);
    double w = sem.equation("M").weights[0];

    // closed-form single-regressor OLS
    double mz = 0, mm = 0;
    for (const auto& r : data.rows) {
        mz += r[0];
        mm += r[1];
    }
    mz /= static_cast<double>(n);
    mm /= static_cast<double>(n);
    double szz = 0, szm = 0;
    for (const auto& r : data.rows) {
        szz += (r[0] - mz) * (r[0] - mz);
        szm += (r[0] - mz) * (r[1] - mm);
    }
    double w_oracle = szm / szz;
    CHECK(w == doctest::Approx(w_oracle).epsilon(1e-9));

    double se = 0.5 / std::sqrt(szz);
    CHECK(std::fabs(w - 0.8) < 3.0 * se);
    CHECK(sem.equation("M").residual_scale == doctest::Approx(0.5).epsilon(0.05));

    // diagnostics carry R^2
    REQUIRE(sem.diagnostics().size() == 1);
    CHECK(sem.diagnostics()[0].metric == "r2");
    CHECK(sem.diagnostics()[0].value > 0.5);
}

TEST_CASE("fit_sem: rank-deficient design names a collinear column") {
    auto g = CausalGraph({{"A", NodeRole::feature, ColumnKind::continuous},
                          {"B", NodeRole::feature, ColumnKind::continuous},
                          {"M", NodeRole::feature, ColumnKind::continuous},
                          {"Y", NodeRole::outcome, ColumnKind::continuous}},
                         {{"A", "M"}, {"B", "M"}});
    Dataset data;
    data.schema = {{"A", ColumnKind::continuous},
                   {"B", ColumnKind::continuous},
                   {"M", ColumnKind::continuous}};
    Rng rng(3);
    for (int i = 0; i < 100; ++i) {
        double a = rng.normal();
        data.rows.push_back({a, a, 3.0 * a});  // B duplicates A
    }
    try {
        fit_sem(g, data);
        FAIL("expected rank-deficiency error");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("collinear") != std::string::npos);
    }
}

TEST_CASE("fit_sem: row minimum enforced") {
    auto g = chain_graph();
    Dataset data;
    data.schema = {{"Z", ColumnKind::continuous},
                   {"M", ColumnKind::continuous},
                   {"F", ColumnKind::continuous}};
    for (int i = 0; i < 15; ++i) {
        data.rows.push_back({double(i), double(i), double(i) * 0.5});
    }
    CHECK_THROWS_AS(fit_sem(g, data), ConfigError);
}

TEST_CASE("fit_sem: logistic node fit") {
    auto g = CausalGraph({{"Z", NodeRole::feature, ColumnKind::continuous},
                          {"B", NodeRole::feature, ColumnKind::binary},
                          {"Y", NodeRole::outcome, ColumnKind::continuous}},
                         {{"Z", "B"}});
    Dataset data;
    data.schema = {{"Z", ColumnKind::continuous}, {"B", ColumnKind::binary}};
    Rng rng(23);
    for (int i = 0; i < 4000; ++i) {
        double z = rng.normal();
        double p = 1.0 / (1.0 + std::exp(-(1.5 * z - 0.3)));
        data.rows.push_back({z, rng.bernoulli(p) ? 1.0 : 0.0});
    }
    auto sem = fit_sem(g, data);
    const auto& eq = sem.equation("B");
    CHECK(eq.link == LinkKind::logistic);
    CHECK(eq.weights[0] == doctest::Approx(1.5).epsilon(0.15));
    CHECK(std::fabs(eq.intercept - (-0.3)) < 0.2);
    CHECK(sem.diagnostics()[0].metric == "accuracy");
    CHECK(sem.diagnostics()[0].value > 0.7);
}

TEST_CASE("sample_synthetic: deterministic chain propagates exactly") {
    auto g = chain_graph();
    std::vector<StructuralEquation> eqs;
    eqs.push_back({"Z", {}, {}, 0.0, LinkKind::identity, 1.0, {}});
    eqs.push_back({"M", {"Z"}, {1.0}, 0.0, LinkKind::identity, 0.0, {}});
    eqs.push_back({"F", {"M"}, {1.0}, 0.0, LinkKind::identity, 0.0, {}});
    eqs.push_back({"Y", {}, {}, 0.0, LinkKind::identity, 0.0, {}});
    Sem sem(g, eqs);
    auto data = sample_synthetic(sem, 100, 5);
    auto z = data.column("Z");
    auto m = data.column("M");
    for (std::size_t i = 0; i < z.size(); ++i) CHECK(m[i] == z[i]);
}

TEST_CASE("sample_synthetic: analytic correlation under unit noise") {
    auto g = CausalGraph({{"Z", NodeRole::feature, ColumnKind::continuous},
                          {"M", NodeRole::feature, ColumnKind::continuous},
                          {"Y", NodeRole::outcome, ColumnKind::continuous}},
                         {{"Z", "M"}});
    std::vector<StructuralEquation> eqs;
    eqs.push_back({"Z", {}, {}, 0.0, LinkKind::identity, 1.0, {}});
    eqs.push_back({"M", {"Z"}, {1.0}, 0.0, LinkKind::identity, 1.0, {}});
    eqs.push_back({"Y", {}, {}, 0.0, LinkKind::identity, 0.0, {}});
    Sem sem(g, eqs);
    auto data = sample_synthetic(sem, 50000, 9);
    CHECK(std::fabs(column_corr(data, "Z", "M") - 1.0 / std::sqrt(2.0)) < 0.02);
}

TEST_CASE("sample_synthetic: determinism contract and n=0 rejection") {
    auto g = chain_graph();
    std::vector<StructuralEquation> eqs;
    eqs.push_back({"Z", {}, {}, 0.0, LinkKind::identity, 1.0, {}});
    eqs.push_back({"M", {"Z"}, {1.0}, 0.0, LinkKind::identity, 1.0, {}});
    eqs.push_back({"F", {"M"}, {1.0}, 0.0, LinkKind::identity, 1.0, {}});
    eqs.push_back({"Y", {}, {}, 0.0, LinkKind::identity, 1.0, {}});
    Sem sem(g, eqs);
    auto a = sample_synthetic(sem, 50, 1);
    auto b = sample_synthetic(sem, 50, 1);
    auto c = sample_synthetic(sem, 50, 2);
    CHECK(a.rows == b.rows);
    CHECK(a.rows != c.rows);
    CHECK_THROWS_AS(sample_synthetic(sem, 0, 1), ConfigError);
}

TEST_CASE("counterfactual_row: null intervention is a bit-exact identity") {
    auto g = triangle_graph();
    std::vector<StructuralEquation> eqs;
    eqs.push_back({"M", {"Z"}, {1.3}, 0.2, LinkKind::identity, 0.5, {}});
    eqs.push_back({"F", {"M", "Z"}, {0.7, -0.4}, -0.1, LinkKind::identity, 0.5, {}});
    Sem sem(g, eqs);
    Rng rng(31);
    for (int i = 0; i < 500; ++i) {
        std::vector<double> row{rng.normal(), rng.normal() * 3.0, rng.normal() * 0.1};
        Intervention iv;
        iv.assignments["Z"] = row[0];  // observed value
        iv.active_edges = all_edges(g);
        auto cf = counterfactual_row(sem, row, iv);
        CHECK(cf == row);  // exact vector equality, no tolerance
    }
}

TEST_CASE("counterfactual_row: linear propagation on a noiseless chain") {
    auto g = chain_graph();
    std::vector<StructuralEquation> eqs;
    eqs.push_back({"M", {"Z"}, {2.0}, 0.0, LinkKind::identity, 0.0, {}});
    eqs.push_back({"F", {"M"}, {1.0}, 0.0, LinkKind::identity, 0.0, {}});
    Sem sem(g, eqs);
    std::vector<double> row{1.0, 2.0, 2.0};
    Intervention iv;
    iv.assignments["Z"] = 2.0;  // z + 1
    iv.active_edges = all_edges(g);
    auto cf = counterfactual_row(sem, row, iv);
    CHECK(cf[1] == doctest::Approx(4.0).epsilon(1e-12));  // M increases by exactly 2
}

TEST_CASE("counterfactual_row: edge-selective path product on the triangle") {
    auto g = triangle_graph();
    const double a = 1.7, b = -0.6, c = 0.9;
    std::vector<StructuralEquation> eqs;
    eqs.push_back({"M", {"Z"}, {a}, 0.3, LinkKind::identity, 0.0, {}});
    eqs.push_back({"F", {"M", "Z"}, {b, c}, -0.2, LinkKind::identity, 0.0, {}});
    Sem sem(g, eqs);

    Rng rng(101);
    std::vector<double> row{rng.normal(), rng.normal(), rng.normal()};
    const double dz = 1.0;
    Intervention partial;
    partial.assignments["Z"] = row[0] + dz;
    partial.active_edges = {{"Z", "M"}, {"M", "F"}};  // direct edge Z->F held at observed
    auto cf = counterfactual_row(sem, row, partial);
    CHECK(cf[2] - row[2] == doctest::Approx(a * b * dz).epsilon(1e-12));

    // exhaustive evaluation cross-check with all edges active
    Intervention full;
    full.assignments["Z"] = row[0] + dz;
    full.active_edges = all_edges(g);
    auto cf_full = counterfactual_row(sem, row, full);
    CHECK(cf_full[2] - row[2] == doctest::Approx((a * b + c) * dz).epsilon(1e-12));
    auto naive = naive_resimulate(sem, row, "Z", row[0] + dz);
    for (std::size_t i = 0; i < row.size(); ++i) {
        CHECK(cf_full[i] == doctest::Approx(naive[i]).epsilon(1e-12));
    }
}

TEST_CASE("property: linear path additivity on a random noiseless SEM") {
    // Z -> {A,B}, A -> B, {A,B} -> F plus direct Z -> F
    CausalGraph g({{"Z", NodeRole::target, ColumnKind::continuous},
                   {"A", NodeRole::feature, ColumnKind::continuous},
                   {"B", NodeRole::feature, ColumnKind::continuous},
                   {"F", NodeRole::feature, ColumnKind::continuous},
                   {"Y", NodeRole::outcome, ColumnKind::continuous}},
                  {{"Z", "A"}, {"Z", "B"}, {"A", "B"}, {"A", "F"}, {"B", "F"}, {"Z", "F"}});
    Rng rng(55);
    for (int iter = 0; iter < 50; ++iter) {
        double wza = rng.normal(), wzb = rng.normal(), wab = rng.normal();
        double waf = rng.normal(), wbf = rng.normal(), wzf = rng.normal();
        std::vector<StructuralEquation> eqs;
        eqs.push_back({"A", {"Z"}, {wza}, 0.1, LinkKind::identity, 0.0, {}});
        eqs.push_back({"B", {"A", "Z"}, {wab, wzb}, -0.2, LinkKind::identity, 0.0, {}});
        eqs.push_back({"F", {"A", "B", "Z"}, {waf, wbf, wzf}, 0.4, LinkKind::identity, 0.0, {}});
        Sem sem(g, eqs);

        std::vector<double> row{rng.normal(), rng.normal(), rng.normal(), rng.normal()};
        double dz = rng.normal();
        Intervention iv;
        iv.assignments["Z"] = row[0] + dz;
        iv.active_edges = all_edges(g);
        auto cf = counterfactual_row(sem, row, iv);

        // sum over directed Z->F routes of the edge-weight products
        double expect_f = dz * (wzf + wza * waf + wzb * wbf + wza * wab * wbf);
        CHECK(cf[3] - row[3] == doctest::Approx(expect_f).epsilon(1e-9));
        double expect_b = dz * (wzb + wza * wab);
        CHECK(cf[2] - row[2] == doctest::Approx(expect_b).epsilon(1e-9));

        auto naive = naive_resimulate(sem, row, "Z", row[0] + dz);
        for (std::size_t i = 0; i < row.size(); ++i) {
            CHECK(cf[i] == doctest::Approx(naive[i]).epsilon(1e-9));
        }
    }
}

TEST_CASE("counterfactual_row: binary mediator thresholds mean plus carried residual") {
    CausalGraph g({{"Z", NodeRole::target, ColumnKind::continuous},
                   {"B", NodeRole::feature, ColumnKind::binary},
                   {"Y", NodeRole::outcome, ColumnKind::continuous}},
                  {{"Z", "B"}});
    std::vector<StructuralEquation> eqs;
    eqs.push_back({"B", {"Z"}, {4.0}, 0.0, LinkKind::logistic, 0.0, {}});
    Sem sem(g, eqs);

    // observed: z=-1, B=0. mean = sigmoid(-4) ~ 0.018, residual ~ -0.018
    std::vector<double> row{-1.0, 0.0};
    Intervention iv;
    iv.assignments["Z"] = 1.0;
    iv.active_edges = all_edges(g);
    auto cf = counterfactual_row(sem, row, iv);
    CHECK(cf[1] == 1.0);  // sigmoid(4) + residual >= 0.5

    iv.assignments["Z"] = -1.0;  // null: unchanged
    CHECK(counterfactual_row(sem, row, iv) == row);
}

TEST_CASE("counterfactual_row: outcome assignment rejected") {
    auto g = chain_graph();
    std::vector<StructuralEquation> eqs;
    eqs.push_back({"M", {"Z"}, {1.0}, 0.0, LinkKind::identity, 0.0, {}});
    eqs.push_back({"F", {"M"}, {1.0}, 0.0, LinkKind::identity, 0.0, {}});
    Sem sem(g, eqs);
    std::vector<double> row{0.0, 0.0, 0.0};
    Intervention iv;
    iv.assignments["Y"] = 1.0;
    CHECK_THROWS_AS(counterfactual_row(sem, row, iv), ConfigError);

    Intervention bad_edge;
    bad_edge.assignments["Z"] = 1.0;
    bad_edge.active_edges = {{"F", "M"}};  // reversed, not a graph edge
    CHECK_THROWS_AS(counterfactual_row(sem, row, bad_edge), ConfigError);
}

TEST_CASE("fit then sample round trip recovers coefficients") {
    auto g = chain_graph();
    std::vector<StructuralEquation> eqs;
    eqs.push_back({"Z", {}, {}, 0.0, LinkKind::identity, 1.0, {}});
    eqs.push_back({"M", {"Z"}, {0.8}, 0.5, LinkKind::identity, 0.7, {}});
    eqs.push_back({"F", {"M"}, {-1.2}, 0.0, LinkKind::identity, 0.4, {}});
    eqs.push_back({"Y", {}, {}, 0.0, LinkKind::identity, 1.0, {}});
    Sem truth(g, eqs);
    auto data = sample_synthetic(truth, 10000, 77);
    auto fitted = fit_sem(g, data);

    auto z = data.column("Z");
    double mz = 0;
    for (double v : z) mz += v;
    mz /= static_cast<double>(z.size());
    double szz = 0;
    for (double v : z) szz += (v - mz) * (v - mz);
    double se_m = 0.7 / std::sqrt(szz);
    CHECK(std::fabs(fitted.equation("M").weights[0] - 0.8) < 3.0 * se_m);
    CHECK(fitted.equation("M").residual_scale == doctest::Approx(0.7).epsilon(0.05));
    CHECK(fitted.equation("F").weights[0] == doctest::Approx(-1.2).epsilon(0.05));
}

TEST_CASE("gen_failure_mode: proxy ground truth") {
    auto fx = gen_failure_mode("proxy", 2000, 4, 1.0);
    CHECK_FALSE(fx.graph.has_edge("smoking", "risk"));  // structural zero direct
    double direct = -1;
    for (const auto& row : fx.truth) {
        if (row.path == "DIRECT") direct = row.effect;
    }
    CHECK(direct == 0.0);
    CHECK(fx.data.has_column("risk"));
    CHECK(fx.data.n_rows() == 2000);
}

TEST_CASE("gen_failure_mode: cancellation truth cancels exactly") {
    auto fx = gen_failure_mode("cancellation", 1000, 4, 1.0);
    double total = -1, cpath = 0, epath = 0;
    for (const auto& row : fx.truth) {
        if (row.path == "TOTAL") total = row.effect;
        if (row.path.find("cscore") != std::string::npos) cpath = row.effect;
        if (row.path.find("escore") != std::string::npos) epath = row.effect;
    }
    CHECK(total == 0.0);
    CHECK(cpath == -1.0);
    CHECK(epath == 1.0);
    CHECK(cpath + epath == 0.0);
}

TEST_CASE("gen_failure_mode: subgroup gating in the generator") {
    auto fx = gen_failure_mode("subgroup", 5000, 8, 1.0);
    for (const auto& row : fx.truth) {
        if (row.path.find("age>=40") != std::string::npos) CHECK(row.effect == 0.0);
    }
    // the marker equation carries the interaction and the SEM reproduces it:
    // counterfactual exposure flips move the marker only below the median
    const auto& eq = fx.sem.equation("marker");
    REQUIRE(eq.gated_terms.size() == 1);
    CHECK(eq.gated_terms[0].gate == "age");

    auto order = feature_order(fx.sem);
    std::map<std::string, std::size_t> idx;
    for (std::size_t i = 0; i < order.size(); ++i) idx[order[i]] = i;
    for (std::size_t r = 0; r < 200; ++r) {
        std::vector<double> row(order.size());
        for (std::size_t c = 0; c < order.size(); ++c) {
            row[c] = fx.data.rows[r][fx.data.column_index(order[c])];
        }
        Intervention iv;
        iv.assignments["exposure"] = 1.0 - row[idx["exposure"]];
        iv.active_edges = {{"exposure", "marker"}};
        auto cf = counterfactual_row(fx.sem, row, iv);
        double dm = cf[idx["marker"]] - row[idx["marker"]];
        if (row[idx["age"]] >= 40.0) {
            CHECK(dm == 0.0);
        } else {
            CHECK(std::fabs(dm) == doctest::Approx(1.0).epsilon(1e-9));
        }
    }
}

TEST_CASE("gen_failure_mode: heart family has a direct route") {
    auto fx = gen_failure_mode("heart", 1000, 3, 1.0);
    CHECK(fx.graph.has_edge("smoking", "risk"));
    double direct = 0;
    for (const auto& row : fx.truth) {
        if (row.path == "DIRECT") direct = row.effect;
    }
    CHECK(direct == 0.5);
}

TEST_CASE("gen_failure_mode: errors and determinism") {
    CHECK_THROWS_AS(gen_failure_mode("nope", 100, 1, 1.0), ConfigError);
    CHECK_THROWS_AS(gen_failure_mode("proxy", 100, 1, 0.0), ConfigError);
    CHECK_THROWS_AS(gen_failure_mode("proxy", 0, 1, 1.0), ConfigError);
    auto a = gen_failure_mode("proxy", 500, 12, 1.0);
    auto b = gen_failure_mode("proxy", 500, 12, 1.0);
    CHECK(a.data.rows == b.data.rows);
}

TEST_CASE("sem json round trip including gated terms") {
    auto fx = gen_failure_mode("subgroup", 500, 2, 1.0);
    auto text = sem_to_json(fx.sem);
    auto back = parse_sem(text, fx.graph);
    CHECK(sem_to_json(back) == text);
    CHECK(back.equation("marker").gated_terms.size() == 1);

    // equation parents must match the graph
    auto other = chain_graph();
    CHECK_THROWS_AS(parse_sem(text, other), ConfigError);
}

TEST_CASE("truth table renders as csv") {
    auto fx = gen_failure_mode("cancellation", 200, 1, 1.0);
    auto csv = truth_to_csv(fx.truth);
    CHECK(csv.find("path,effect") == 0);
    CHECK(csv.find("TOTAL,0") != std::string::npos);
}
