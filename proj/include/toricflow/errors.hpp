#pragma once

#include <stdexcept>
#include <string>

namespace toricflow {

// Base for every error raised by the library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Polytope construction.
struct NotFullDimensional : Error { using Error::Error; };
struct OriginNotInterior : Error { using Error::Error; };
struct DelzantViolation : Error { using Error::Error; };

// Potentials / weights.
struct BoundaryPoint : Error { using Error::Error; };
struct NonConvexInput : Error { using Error::Error; };
struct NonPositiveDefinite : Error { using Error::Error; };
struct OutsidePolytope : Error { using Error::Error; };
struct NonPositiveFactor : Error { using Error::Error; };

struct FanoViolation : Error {
    FanoViolation(std::size_t vertex_index, std::size_t factor_index, double value)
        : Error("weight factor " + std::to_string(factor_index) + " is " + std::to_string(value) +
                " (not positive) at vertex " + std::to_string(vertex_index)),
          vertex(vertex_index), factor(factor_index) {}
    std::size_t vertex;
    std::size_t factor;
};

// Numerics.
struct QuadratureUnderflow : Error { using Error::Error; };
struct QuadratureUnstable : Error { using Error::Error; };
struct NewtonDivergence : Error { using Error::Error; };
struct ConvexityLoss : Error { using Error::Error; };
struct MinimizerOnBoundary : Error { using Error::Error; };
struct GaugeInconsistency : Error { using Error::Error; };
// MaxStepsExceeded is declared in flow.hpp: it carries the partial trajectory.

// Configuration.
struct SchemaError : Error {
    SchemaError(std::string pointer_path, const std::string& what)
        : Error(what + " (at '" + pointer_path + "')"), pointer(std::move(pointer_path)) {}
    std::string pointer;
};

struct ValueError : Error {
    ValueError(std::string field_name, const std::string& what)
        : Error(field_name + ": " + what), field(std::move(field_name)) {}
    std::string field;
};

}  // namespace toricflow
