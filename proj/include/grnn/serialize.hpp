#pragma once

// JSON persistence. Matrices are {"rows", "cols", "data"} with row-major data;
// topologies are {"n", "edges": [[src, dst], ...] (0-based), "positions"}.

#include <string>

#include <json.hpp>

#include "grnn/codesign.hpp"
#include "grnn/controllers.hpp"
#include "grnn/graphs.hpp"
#include "grnn/lqr.hpp"

namespace grnn {

using Json = nlohmann::json;

[[nodiscard]] Json matrix_to_json(const Matrix& m);
[[nodiscard]] Matrix matrix_from_json(const Json& j);

[[nodiscard]] Json topology_to_json(const Topology& t);
[[nodiscard]] Topology topology_from_json(const Json& j);

[[nodiscard]] Json mask_to_json(const GsoMask& m);
[[nodiscard]] GsoMask mask_from_json(const Json& j);

[[nodiscard]] Json system_to_json(const LinearSystem& sys);
[[nodiscard]] LinearSystem system_from_json(const Json& j);

// The system plus Q, R, P and the horizon.
[[nodiscard]] Json problem_to_json(const LqrProblem& prob);
[[nodiscard]] LqrProblem problem_from_json(const Json& j);

// Checkpoints carry an "architecture" tag of "grnn" or "gcnn".
[[nodiscard]] Json params_to_json(const GrnnParams& p);
[[nodiscard]] Json params_to_json(const GcnnParams& p);
[[nodiscard]] GrnnParams grnn_params_from_json(const Json& j);
[[nodiscard]] GcnnParams gcnn_params_from_json(const Json& j);

// Summary record of a codesign run (topology, costs, refined parameters).
[[nodiscard]] Json codesign_result_to_json(const CodesignResult& r);

}  // namespace grnn
