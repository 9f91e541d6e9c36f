#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace sigverify {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

// Tolerances shared across modules.
inline constexpr double kTolAct = 1e-6;   // |v̂ - σ(v)| below this counts as satisfied
inline constexpr double kTolLp = 1e-7;    // absolute residual accepted on LP rows
inline constexpr double kTolSepRel = 1e-9;
inline constexpr double kDegenerateWidth = 1e-9;
inline constexpr double kSShapedClamp = 30.0;

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Dimensions of two chained objects disagree.
class DimensionError : public Error {
public:
    DimensionError(int layer, const std::string &what)
        : Error("layer " + std::to_string(layer) + ": " + what), layer_(layer)
    {
    }
    int layer() const { return layer_; }

private:
    int layer_;
};

/// A JSON document violates one of the file schemas. `path` is a JSON pointer.
class SchemaError : public Error {
public:
    SchemaError(std::string path, const std::string &what)
        : Error(path + ": " + what), path_(std::move(path))
    {
    }
    const std::string &path() const { return path_; }

private:
    std::string path_;
};

class UnsupportedLayerError : public SchemaError {
public:
    using SchemaError::SchemaError;
};

/// The requested point cannot be separated from the activation curve.
class NoSeparationError : public Error {
public:
    using Error::Error;
};

/// A soundness invariant failed at run time (e.g. an LP value escaped its interval).
class SoundnessError : public Error {
public:
    using Error::Error;
};

template <typename Scalar>
struct BasicInterval {
    Scalar lo{0};
    Scalar hi{0};

    Scalar width() const { return hi - lo; }
    Scalar mid() const { return (lo + hi) / 2; }
    bool contains(Scalar x, Scalar tol = Scalar(0)) const { return x >= lo - tol && x <= hi + tol; }
    bool is_subset_of(const BasicInterval &other) const { return lo >= other.lo && hi <= other.hi; }
    Scalar clamp(Scalar x) const { return std::clamp(x, lo, hi); }

    friend bool operator==(const BasicInterval &, const BasicInterval &) = default;
};

using Interval = BasicInterval<double>;

/// y = slope * x + intercept
struct Line {
    double slope = 0.0;
    double intercept = 0.0;

    double operator()(double x) const { return slope * x + intercept; }

    static Line through(double x, double y, double slope) { return {slope, y - slope * x}; }
};

}  // namespace sigverify
