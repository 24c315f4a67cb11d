#ifndef SOBMOR_TYPES_HPP
#define SOBMOR_TYPES_HPP

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <string>

namespace sobmor {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

/// Mismatched or malformed dimensions (e.g. a parameter block whose length is
/// not a triangular number).
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A structural constraint is violated (skew-symmetry, definiteness, layout tag).
class StructureError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A numerical computation failed beyond its contracted tolerance.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Shifted pencil sI - A (or s^2 M + s D + K) is singular at the given point.
class SingularPencilError : public NumericalError {
public:
    SingularPencilError(const std::string& msg, Complex point)
        : NumericalError(msg), point_(point) {}
    Complex point() const { return point_; }

private:
    Complex point_;
};

} // namespace sobmor

#endif
