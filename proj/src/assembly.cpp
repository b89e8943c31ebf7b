#include "vioc/assembly.hpp"

#include <Eigen/SparseCholesky>

#include <ostream>

namespace vioc {

namespace {

const Point& vertex(const Mesh& mesh, Index v)
{
    return mesh.vertices[static_cast<std::size_t>(v)];
}

// Gradients of the three barycentric coordinates (constant on the triangle).
std::array<Point, 3> hat_gradients(const Mesh& mesh, const std::array<Index, 3>& tri, double& area)
{
    const Point& a = vertex(mesh, tri[0]);
    const Point& b = vertex(mesh, tri[1]);
    const Point& c = vertex(mesh, tri[2]);
    const double det = (b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y());
    area = 0.5 * det;
    if (!(area > 0.0))
        throw AssemblyError("degenerate or clockwise triangle");
    const auto rot = [det](const Point& e) { return Point(-e.y() / det, e.x() / det); };
    // grad(lambda_i) is the inward normal of the opposite edge scaled by 1/(2 area).
    return {rot(c - b), rot(a - c), rot(b - a)};
}

SparseMatrix from_triplets(Index n, const std::vector<Triplet>& triplets)
{
    SparseMatrix op(n, n);
    op.setFromTriplets(triplets.begin(), triplets.end());
    op.makeCompressed();
    return op;
}

} // namespace

DofMap make_dof_map(const Mesh& mesh)
{
    DofMap dofs;
    std::vector<bool> dirichlet(static_cast<std::size_t>(mesh.num_vertices()), false);
    for (const auto& e : mesh.boundary_edges)
        if (e.tag == BoundaryTag::Gamma1)
            for (Index v : e.vertices) dirichlet[static_cast<std::size_t>(v)] = true;

    dofs.free_index.assign(dirichlet.size(), -1);
    for (Index v = 0; v < mesh.num_vertices(); ++v) {
        if (dirichlet[static_cast<std::size_t>(v)]) {
            dofs.dirichlet_nodes.push_back(v);
        } else {
            dofs.free_index[static_cast<std::size_t>(v)] = dofs.num_free();
            dofs.free_nodes.push_back(v);
        }
    }
    return dofs;
}

SparseMatrix assemble_stiffness(const Mesh& mesh)
{
    std::vector<Triplet> triplets;
    triplets.reserve(9 * mesh.triangles.size());
    for (const auto& tri : mesh.triangles) {
        double area = 0.0;
        const auto grads = hat_gradients(mesh, tri, area);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                triplets.emplace_back(tri[i], tri[j], area * grads[i].dot(grads[j]));
    }
    return from_triplets(mesh.num_vertices(), triplets);
}

SparseMatrix assemble_mass(const Mesh& mesh)
{
    std::vector<Triplet> triplets;
    triplets.reserve(9 * mesh.triangles.size());
    for (const auto& tri : mesh.triangles) {
        double area = 0.0;
        hat_gradients(mesh, tri, area);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                triplets.emplace_back(tri[i], tri[j], area / 12.0 * (i == j ? 2.0 : 1.0));
    }
    return from_triplets(mesh.num_vertices(), triplets);
}

SparseMatrix assemble_boundary_mass(const Mesh& mesh)
{
    std::vector<Triplet> triplets;
    for (const auto& e : mesh.boundary_edges) {
        if (e.tag != BoundaryTag::Gamma2) continue;
        const double len = (vertex(mesh, e.vertices[0]) - vertex(mesh, e.vertices[1])).norm();
        if (!(len > 0.0)) throw AssemblyError("degenerate boundary edge");
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
                triplets.emplace_back(e.vertices[i], e.vertices[j], len / 6.0 * (i == j ? 2.0 : 1.0));
    }
    return from_triplets(mesh.num_vertices(), triplets);
}

Vector assemble_boundary_flux(const Mesh& mesh, const std::function<double(const Point&)>& q)
{
    Vector nodal = Vector::Zero(mesh.num_vertices());
    for (const auto& e : mesh.boundary_edges) {
        if (e.tag != BoundaryTag::Gamma2) continue;
        for (Index v : e.vertices) {
            const double value = q(vertex(mesh, v));
            if (!std::isfinite(value))
                throw std::domain_error("assemble_boundary_flux: non-finite flux at vertex " +
                                        std::to_string(v));
            nodal[v] = value;
        }
    }
    return assemble_boundary_mass(mesh) * nodal;
}

Vector assemble_control_load(const SparseMatrix& mass, const ControlField& g)
{
    if (g.size() != mass.cols())
        throw std::invalid_argument("assemble_control_load: control size does not match mesh");
    return mass * g;
}

FemSpace::FemSpace(Mesh m)
    : mesh(std::move(m)),
      dofs(make_dof_map(mesh)),
      stiffness(assemble_stiffness(mesh)),
      mass(assemble_mass(mesh)),
      boundary_mass(assemble_boundary_mass(mesh))
{
}

SparseMatrix restrict_operator(const SparseMatrix& op, const std::vector<Index>& rows,
                               const std::vector<Index>& cols)
{
    std::vector<Index> row_pos(static_cast<std::size_t>(op.rows()), -1);
    std::vector<Index> col_pos(static_cast<std::size_t>(op.cols()), -1);
    for (std::size_t k = 0; k < rows.size(); ++k) row_pos[static_cast<std::size_t>(rows[k])] = static_cast<Index>(k);
    for (std::size_t k = 0; k < cols.size(); ++k) col_pos[static_cast<std::size_t>(cols[k])] = static_cast<Index>(k);

    std::vector<Triplet> triplets;
    for (Index c = 0; c < op.outerSize(); ++c) {
        const Index cp = col_pos[static_cast<std::size_t>(c)];
        if (cp < 0) continue;
        for (SparseMatrix::InnerIterator it(op, c); it; ++it) {
            const Index rp = row_pos[static_cast<std::size_t>(it.row())];
            if (rp >= 0) triplets.emplace_back(rp, cp, it.value());
        }
    }
    SparseMatrix out(static_cast<Index>(rows.size()), static_cast<Index>(cols.size()));
    out.setFromTriplets(triplets.begin(), triplets.end());
    out.makeCompressed();
    return out;
}

Vector gather(const Vector& v, const std::vector<Index>& indices)
{
    Vector out(static_cast<Index>(indices.size()));
    for (std::size_t k = 0; k < indices.size(); ++k) out[static_cast<Index>(k)] = v[indices[k]];
    return out;
}

void scatter(const Vector& values, const std::vector<Index>& indices, Vector& into)
{
    for (std::size_t k = 0; k < indices.size(); ++k) into[indices[k]] = values[static_cast<Index>(k)];
}

EigenEstimate coercivity_estimate(const FemSpace& space, double tol, Index max_iter)
{
    const auto& free = space.dofs.free_nodes;
    if (free.empty()) throw AssemblyError("coercivity_estimate: no free nodes");
    const SparseMatrix a = restrict_operator(space.stiffness, free, free);
    const SparseMatrix b = a + restrict_operator(space.mass, free, free);

    Eigen::SimplicialLDLT<SparseMatrix> solver(a);
    const double pivot_floor = 1e-12 * solver.vectorD().cwiseAbs().maxCoeff();
    if (solver.info() != Eigen::Success || (solver.vectorD().array() <= pivot_floor).any())
        throw AssemblyError("coercivity_estimate: restricted stiffness is singular (meas(Gamma1) = 0?)");

    // Power iteration on A^{-1} B converges to the largest 1/lambda.
    Vector x = Vector::Ones(a.rows());
    x /= std::sqrt(x.dot(b * x));
    EigenEstimate est;
    double previous = x.dot(a * x);
    for (Index it = 1; it <= max_iter; ++it) {
        x = solver.solve(b * x);
        x /= std::sqrt(x.dot(b * x));
        const double rayleigh = x.dot(a * x);
        est.value = rayleigh;
        est.iterations = it;
        if (std::abs(rayleigh - previous) <= 0.1 * tol * rayleigh) {
            est.converged = true;
            break;
        }
        previous = rayleigh;
    }
    return est;
}

double coercivity_constant(const FemSpace& space)
{
    const EigenEstimate est = coercivity_estimate(space);
    if (!est.converged) throw AssemblyError("coercivity_constant: inverse iteration did not converge");
    return est.value;
}

void write_coordinate(std::ostream& os, const SparseMatrix& op)
{
    const auto old_precision = os.precision(17);
    os << op.rows() << ' ' << op.cols() << ' ' << op.nonZeros() << '\n';
    for (Index c = 0; c < op.outerSize(); ++c)
        for (SparseMatrix::InnerIterator it(op, c); it; ++it)
            os << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
    os.precision(old_precision);
}

} // namespace vioc
