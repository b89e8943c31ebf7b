#ifndef VIOC_ASSEMBLY_HPP
#define VIOC_ASSEMBLY_HPP

#include "vioc/mesh.hpp"

#include <cmath>
#include <iosfwd>

namespace vioc {

/// Partition of the vertices into Gamma1 (Dirichlet) nodes and free nodes.
/// Corners shared by a Gamma1 and a Gamma2 edge are Dirichlet.
struct DofMap {
    std::vector<Index> dirichlet_nodes;
    std::vector<Index> free_nodes;
    /// Position of each vertex inside free_nodes, or -1 for Dirichlet nodes.
    std::vector<Index> free_index;

    Index num_free() const { return static_cast<Index>(free_nodes.size()); }
    bool is_dirichlet(Index v) const { return free_index[static_cast<std::size_t>(v)] < 0; }
};

DofMap make_dof_map(const Mesh& mesh);

/// A(i,j) = integral of grad(phi_i) . grad(phi_j) over the domain.
SparseMatrix assemble_stiffness(const Mesh& mesh);

/// M_H(i,j) = integral of phi_i phi_j over the domain.
SparseMatrix assemble_mass(const Mesh& mesh);

/// M_Q(i,j) = integral of phi_i phi_j over Gamma2.
SparseMatrix assemble_boundary_mass(const Mesh& mesh);

/// F_q(i) = integral over Gamma2 of q phi_i, with q replaced by its nodal interpolant.
Vector assemble_boundary_flux(const Mesh& mesh, const std::function<double(const Point&)>& q);

/// M_H g.
Vector assemble_control_load(const SparseMatrix& mass, const ControlField& g);

/// Assembled operators of one mesh. Immutable once built.
struct FemSpace {
    Mesh mesh;
    DofMap dofs;
    SparseMatrix stiffness;
    SparseMatrix mass;
    SparseMatrix boundary_mass;

    explicit FemSpace(Mesh m);

    Index size() const { return mesh.num_vertices(); }
};

template <typename Derived>
double energy_norm(const SparseMatrix& op, const Eigen::MatrixBase<Derived>& v)
{
    if (v.size() != op.rows())
        throw std::invalid_argument("norm: field size does not match operator");
    return std::sqrt(std::max(0.0, v.dot(op * v)));
}

/// Full H1 norm sqrt(|v|_1^2 + ||v||_0^2).
template <typename Derived>
double h1_norm(const FemSpace& space, const Eigen::MatrixBase<Derived>& v)
{
    if (v.size() != space.size())
        throw std::invalid_argument("h1_norm: field size does not match mesh");
    const Vector w = v;
    return std::sqrt(std::max(0.0, w.dot(space.stiffness * w) + w.dot(space.mass * w)));
}

template <typename Derived>
double l2_norm(const FemSpace& space, const Eigen::MatrixBase<Derived>& v)
{
    return energy_norm(space.mass, v);
}

template <typename Derived>
double boundary_l2_norm(const FemSpace& space, const Eigen::MatrixBase<Derived>& v)
{
    return energy_norm(space.boundary_mass, v);
}

/// H inner product v^T M_H w.
template <typename A, typename B>
double l2_inner(const FemSpace& space, const Eigen::MatrixBase<A>& v, const Eigen::MatrixBase<B>& w)
{
    return v.dot(space.mass * w);
}

/// Rows and columns of `op` at `rows` x `cols` (indices into the full operator).
SparseMatrix restrict_operator(const SparseMatrix& op, const std::vector<Index>& rows,
                               const std::vector<Index>& cols);

Vector gather(const Vector& v, const std::vector<Index>& indices);
void scatter(const Vector& values, const std::vector<Index>& indices, Vector& into);

struct EigenEstimate {
    double value = 0.0;
    Index iterations = 0;
    bool converged = false;
};

/// Smallest generalized eigenvalue of A x = lambda (A + M_H) x restricted to
/// the free nodes, by inverse power iteration to relative tolerance `tol`.
/// The result is the discrete coercivity constant: a(v,v) >= lambda ||v||_V^2 on V_h0.
EigenEstimate coercivity_estimate(const FemSpace& space, double tol = 1e-10, Index max_iter = 10000);

double coercivity_constant(const FemSpace& space);

/// Coordinate text dump: header "rows cols nnz", then "row col value" per entry.
void write_coordinate(std::ostream& os, const SparseMatrix& op);

} // namespace vioc

#endif // VIOC_ASSEMBLY_HPP
