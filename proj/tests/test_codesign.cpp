#include <doctest.h>

#include "grnn/codesign.hpp"
#include "support.hpp"

using namespace grnn;
using namespace grnn::testing;

namespace {

struct Small {
    Rng rng{31};
    LqrProblem prob = small_problem(6, 2, 0.95, 10, rng);
    EvaluationSet validation;
    EvaluationSet evaluation;
    TrainConfig config = TrainConfig::grnn_defaults();

    Small() {
        Rng v(1), e(2);
        validation = make_evaluation_set(prob, 8, v);
        evaluation = make_evaluation_set(prob, 8, e);
        config.total_batches = 30;
        config.batch_size = 4;
        config.validation_every = 10;
        config.validation_size = 8;
    }

    CodesignResult run(double lambda, std::uint64_t seed = 9) const {
        Rng rng(seed);
        return codesign(prob, lambda, config, validation, evaluation, rng);
    }
};

}  // namespace

TEST_SUITE("codesign") {
    TEST_CASE("soft threshold") {
        CHECK(prox_l1(Matrix(1, 1, 2.0), 0.5)(0, 0) == 1.5);
        CHECK(prox_l1(Matrix(1, 1, -0.3), 0.5)(0, 0) == 0.0);
        Rng rng(1);
        const Matrix s = rng.normal_matrix(4, 4);
        CHECK(prox_l1(s, 0.0) == s);
        CHECK_THROWS_AS((void)prox_l1(s, -1.0), ParameterError);

        // The diagonal is shrunk like any other entry.
        const Matrix d = prox_l1(Matrix::identity(3), 0.25);
        CHECK(d(1, 1) == 0.75);

        Matrix tau(4, 4, 0.1);
        tau(0, 0) = 100.0;
        const Matrix per = prox_l1(s, tau);
        CHECK(per(0, 0) == 0.0);
        CHECK(per(1, 2) == prox_l1(s, 0.1)(1, 2));
        CHECK_THROWS_AS((void)prox_l1(s, Matrix(2, 2)), DimensionError);
    }

    TEST_CASE("soft threshold matches grid-search minimizers") {
        Rng rng(2);
        double worst = 0.0;
        for (int i = 0; i < 200; ++i) {
            const double s = rng.uniform(-3.0, 3.0), tau = rng.uniform(0.0, 2.0);
            worst = std::max(worst, std::abs(prox_l1(Matrix(1, 1, s), tau)(0, 0) - prox_grid_search(s, tau)));
        }
        CHECK(worst <= 1e-6);
    }

    TEST_CASE("threshold support") {
        Matrix s(3, 3);
        s(0, 1) = 0.0039;
        s(1, 0) = 0.0041;
        s(2, 2) = 5.0;
        const Topology t = threshold_support(s, 0.004);
        CHECK(t.edge_count() == 1);
        CHECK(t.has_edge(0, 1));   // s(1, 0): node 1 listens to node 0
        CHECK_FALSE(t.has_edge(1, 0));
        CHECK(threshold_support(Matrix(4, 4)).edge_count() == 0);
        CHECK(threshold_support(-1.0 * s).edge_count() == 1);
        CHECK_THROWS_AS((void)threshold_support(s, 0.0), ParameterError);
        CHECK_THROWS_AS((void)threshold_support(Matrix(2, 3)), DimensionError);
    }

    TEST_CASE("entries zeroed by the prox never re-enter the support") {
        // Every threshold eps' > 0 excludes the exact zeros the prox creates; the
        // support is constant in eps' up to the smallest surviving magnitude.
        Rng rng(3);
        const Matrix s = rng.normal_matrix(10, 10);
        const double tau = 0.5;
        const Matrix x = prox_l1(s, tau);
        double smallest = 1e300;
        for (std::size_t i = 0; i < 10; ++i)
            for (std::size_t j = 0; j < 10; ++j) {
                if (i != j && x(i, j) != 0.0) smallest = std::min(smallest, std::abs(x(i, j)));
                if (std::abs(s(i, j)) <= tau) REQUIRE(x(i, j) == 0.0);
            }
        const Topology ref = threshold_support(x, smallest);
        for (double frac : {1e-9, 1e-3, 0.5, 1.0}) CHECK(threshold_support(x, frac * smallest) == ref);
    }

    TEST_CASE("codesign bookkeeping") {
        const Small f;
        const CodesignResult r = f.run(0.3);
        CHECK(r.lambda == 0.3);
        CHECK(r.edge_count == r.identified_topology.edge_count());
        REQUIRE(r.refined_params.mask);
        CHECK(r.refined_params.mask->admits(r.refined_params.s));
        CHECK(support_mask(r.identified_topology) == *r.refined_params.mask);
        CHECK(threshold_support(r.refined_params.s, 1e-300).edge_count() <= r.edge_count);
        CHECK_FALSE(r.step1_params.mask);
        CHECK(r.refinement_regressed == (r.refined_validation_cost > r.step1_validation_cost));
        CHECK(r.eval_q1 <= r.eval_median);
        CHECK(r.eval_median <= r.eval_q3);
        CHECK(r.refined_cost == doctest::Approx(evaluate_normalized(r.refined_params, f.prob, f.evaluation)));
        CHECK(r.step1_curve.samples.size() == 4);
        CHECK(r.refined_curve.samples.size() == 4);
        CHECK_THROWS_AS((void)f.run(-1.0), ParameterError);
    }

    TEST_CASE("lambda extremes") {
        const Small f;
        CHECK(f.run(0.0).edge_count == 30);  // dense: every off-diagonal entry survives
        const CodesignResult heavy = f.run(1e3);
        CHECK(heavy.edge_count == 0);
        CHECK(max_abs(heavy.step1_params.s) == 0.0);
    }

    TEST_CASE("codesign is reproducible") {
        const Small f;
        const auto a = f.run(0.5, 4), b = f.run(0.5, 4);
        CHECK(a.refined_params.s == b.refined_params.s);
        CHECK(a.refined_cost == b.refined_cost);
    }

    TEST_CASE("sweep cells") {
        const Small f;
        const SweepInstance inst{&f.prob, &f.validation, &f.evaluation, 1234};
        const SweepInstance instances[] = {inst};
        const double lambdas[] = {1.0, 0.01, 1.0};
        const TradeoffCurve curve = sweep_lambda(instances, lambdas, f.config);
        REQUIRE(curve.cells.size() == 3);
        CHECK(curve.failures() == 0);
        // Duplicate lambda values give identical cells.
        CHECK(curve.cells[0].result->refined_params.s == curve.cells[2].result->refined_params.s);
        REQUIRE(curve.points.size() == 3);
        CHECK(curve.points[0].lambda == 0.01);
        CHECK(curve.points[1].lambda == 1.0);

        // A single-lambda sweep equals a direct codesign call with the cell seed.
        const double one[] = {1.0};
        const TradeoffCurve single = sweep_lambda(instances, one, f.config);
        Rng rng(cell_seed(1234, 1.0));
        const CodesignResult direct = codesign(f.prob, 1.0, f.config, f.validation, f.evaluation, rng);
        REQUIRE(single.points.size() == 1);
        CHECK(single.cells[0].result->refined_params.s == direct.refined_params.s);
        CHECK(single.points[0].cost_median == direct.refined_cost);
        CHECK(single.points[0].edges_median == static_cast<double>(direct.edge_count));

        // Thread count does not change results.
        const TradeoffCurve threaded = sweep_lambda(instances, lambdas, f.config, {}, 3);
        for (std::size_t i = 0; i < 3; ++i)
            CHECK(threaded.cells[i].result->refined_cost == curve.cells[i].result->refined_cost);

        CHECK_THROWS_AS((void)sweep_lambda({}, lambdas, f.config), ParameterError);
        CHECK_THROWS_AS((void)sweep_lambda(instances, {}, f.config), ParameterError);
    }

    TEST_CASE("failed cells are recorded, not thrown") {
        Small f;
        LqrProblem blowup = f.prob;
        blowup.sys.a = 1e200 * Matrix::identity(6);
        const SweepInstance instances[] = {{&f.prob, &f.validation, &f.evaluation, 1}, {&blowup, &f.validation, &f.evaluation, 2}};
        const double lambdas[] = {0.1, 10.0};
        const TradeoffCurve curve = sweep_lambda(instances, lambdas, f.config);
        CHECK(curve.failures() == 2);
        CHECK_FALSE(curve.cells[2].error.empty());
        CHECK(curve.points[0].successes == 1);
        CHECK(curve.points[0].failures == 1);
    }

    TEST_CASE("default lambda grid") {
        const auto grid = default_lambda_grid();
        CHECK(grid.size() == 14);
        CHECK(grid.front() == doctest::Approx(0.01));
        CHECK(grid.back() == doctest::Approx(100.0));
        CHECK(std::count(grid.begin(), grid.end(), 1.0) == 1);
        CHECK(std::count(grid.begin(), grid.end(), 2.0) == 1);
        CHECK(std::is_sorted(grid.begin(), grid.end()));
    }
}
