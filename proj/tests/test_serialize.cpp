#include <doctest.h>

#include "grnn/serialize.hpp"
#include "support.hpp"

using namespace grnn;
using namespace grnn::testing;

namespace {

// Round trips through text so number formatting is exercised too.
Json through_text(const Json& j) { return Json::parse(j.dump()); }

}  // namespace

TEST_SUITE("serialize") {
    TEST_CASE("matrices round trip bit for bit") {
        Rng rng(1);
        const Matrix m = rng.normal_matrix(3, 5);
        const Json j = matrix_to_json(m);
        CHECK(j.at("rows") == 3);
        CHECK(j.at("cols") == 5);
        CHECK(j.at("data").size() == 15);
        CHECK(j.at("data")[1].get<double>() == m(0, 1));
        CHECK(matrix_from_json(through_text(j)) == m);
        CHECK(matrix_from_json(matrix_to_json(Matrix(0, 0))) == Matrix(0, 0));

        Json bad = j;
        bad["rows"] = 4;
        CHECK_THROWS_AS((void)matrix_from_json(bad), DimensionError);
    }

    TEST_CASE("topologies, masks and systems") {
        Rng rng(2);
        const Topology t = sample_topology(9, 2, rng);
        CHECK(topology_from_json(through_text(topology_to_json(t))) == t);

        const GsoMask mask = support_mask(t);
        CHECK(mask_from_json(through_text(mask_to_json(mask))) == mask);

        const LinearSystem sys = generate_system(t, 0.995, 1.0, rng);
        const LinearSystem back = system_from_json(through_text(system_to_json(sys)));
        CHECK(back.a == sys.a);
        CHECK(back.b == sys.b);
        CHECK(back.source_topology == t);
        CHECK(back.norm_a == sys.norm_a);
    }

    TEST_CASE("problems") {
        Rng rng(3);
        const LqrProblem prob = small_problem(7, 2, 1.05, 12, rng);
        const LqrProblem back = problem_from_json(through_text(problem_to_json(prob)));
        CHECK(back.p_mat == prob.p_mat);
        CHECK(back.q_mat == prob.q_mat);
        CHECK(back.horizon == 12);
    }

    TEST_CASE("checkpoints") {
        Rng rng(4);
        const Topology t = sample_topology(8, 2, rng);
        GrnnParams g = init_grnn(t, {1, 3, 1}, ShiftPolicy::masked, rng, Activation::relu);
        randomize_shift(g, rng);
        const Json gj = through_text(params_to_json(g));
        CHECK(gj.at("architecture") == "grnn");
        const GrnnParams gb = grnn_params_from_json(gj);
        CHECK(gb.s == g.s);
        CHECK(gb.w == g.w);
        CHECK(gb.mask == g.mask);
        CHECK(gb.activation == Activation::relu);
        CHECK(gb.train_s == g.train_s);

        const GrnnParams fixed = init_grnn(t, {}, ShiftPolicy::fixed, rng);
        const GrnnParams fixed_back = grnn_params_from_json(params_to_json(fixed));
        CHECK(fixed_back.mask == fixed.mask);
        CHECK(fixed_back.s == fixed.s);
        CHECK_FALSE(fixed_back.train_s);

        const GcnnParams c = init_gcnn(t, 1, default_gcnn_layers(), rng);
        const Json cj = through_text(params_to_json(c));
        CHECK(cj.at("architecture") == "gcnn");
        const GcnnParams cb = gcnn_params_from_json(cj);
        REQUIRE(cb.layers.size() == 2);
        CHECK(cb.layers[0].taps[4] == c.layers[0].taps[4]);
        CHECK(cb.parameter_count() == 192);

        CHECK_THROWS_AS((void)grnn_params_from_json(cj), ParameterError);
        CHECK_THROWS_AS((void)gcnn_params_from_json(gj), ParameterError);
    }
}
