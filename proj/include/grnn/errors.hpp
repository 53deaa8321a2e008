#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace grnn {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid argument values (counts, indices, tolerances).
class ParameterError : public Error {
public:
    using Error::Error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

// Input that is structurally valid but degenerate (edgeless graph, asymmetric matrix).
class DegenerateInputError : public Error {
public:
    using Error::Error;
};

// Iterative method hit its cap or produced non-finite values.
class NumericalError : public Error {
public:
    using Error::Error;
};

class NotSpdError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

// A closed-loop rollout produced a non-finite state.
class DivergedError : public Error {
public:
    DivergedError(const std::string& what, std::size_t step) : Error(what), step_(step) {}
    [[nodiscard]] std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

// Internal consistency violation, e.g. a graph shift operator with entries outside its mask.
class InvariantError : public Error {
public:
    using Error::Error;
};

class TrainingAborted : public Error {
public:
    TrainingAborted(const std::string& what, std::string stage, std::size_t batch,
                    std::vector<double> loss_history)
        : Error(what), stage_(std::move(stage)), batch_(batch), loss_history_(std::move(loss_history)) {}

    [[nodiscard]] const std::string& stage() const noexcept { return stage_; }
    [[nodiscard]] std::size_t batch() const noexcept { return batch_; }
    [[nodiscard]] const std::vector<double>& loss_history() const noexcept { return loss_history_; }

private:
    std::string stage_;
    std::size_t batch_;
    std::vector<double> loss_history_;
};

}  // namespace grnn
