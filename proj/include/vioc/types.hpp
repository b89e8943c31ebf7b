#ifndef VIOC_TYPES_HPP
#define VIOC_TYPES_HPP

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <stdexcept>
#include <string>

namespace vioc {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Point = Eigen::Vector2d;
using SparseMatrix = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

// Nodal P1 fields: one coefficient per mesh vertex, numbered like the mesh.
using StateField = Vector;
using ControlField = Vector;

/// A degenerate element or a singular restricted operator.
class AssemblyError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A linear solve inside an iterative method failed.
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The enumeration oracle could not certify a unique KKT partition.
class OracleError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace vioc

#endif // VIOC_TYPES_HPP
