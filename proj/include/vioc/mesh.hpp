#ifndef VIOC_MESH_HPP
#define VIOC_MESH_HPP

#include "vioc/types.hpp"

#include <array>
#include <functional>
#include <iosfwd>
#include <vector>

namespace vioc {

enum class BoundaryTag { Gamma1, Gamma2 };

enum class Side : unsigned { Left = 1u, Right = 2u, Bottom = 4u, Top = 8u };

/// Set of rectangle sides, used to select the Dirichlet portion Gamma1.
class SideSet {
public:
    constexpr SideSet() = default;
    constexpr SideSet(std::initializer_list<Side> sides)
    {
        for (Side s : sides) bits_ |= static_cast<unsigned>(s);
    }

    constexpr bool contains(Side s) const { return (bits_ & static_cast<unsigned>(s)) != 0u; }
    constexpr bool empty() const { return bits_ == 0u; }
    constexpr void insert(Side s) { bits_ |= static_cast<unsigned>(s); }
    constexpr bool operator==(const SideSet&) const = default;

private:
    unsigned bits_ = 0u;
};

/// Parses "left", "right", "bottom" or "top"; throws std::invalid_argument otherwise.
Side parse_side(const std::string& name);
const char* side_name(Side s);

struct Rectangle {
    double x0 = 0.0;
    double x1 = 1.0;
    double y0 = 0.0;
    double y1 = 1.0;

    double area() const { return (x1 - x0) * (y1 - y0); }
};

struct BoundaryEdge {
    std::array<Index, 2> vertices;
    BoundaryTag tag;
};

/// Conforming P1 triangulation of a rectangle.
///
/// Vertices are numbered row-major (x fastest) and triangles are
/// counterclockwise. Every boundary edge carries exactly one tag; Gamma1 is a
/// union of whole rectangle sides.
struct Mesh {
    std::vector<Point> vertices;
    std::vector<std::array<Index, 3>> triangles;
    std::vector<BoundaryEdge> boundary_edges;
    Rectangle domain;
    SideSet gamma1_sides;
    Index nx = 0;
    Index ny = 0;
    int level = 0;
    double h = 0.0;

    Index num_vertices() const { return static_cast<Index>(vertices.size()); }
    Index num_triangles() const { return static_cast<Index>(triangles.size()); }
};

/// Structured mesh of `nx` by `ny` cells, each split along the lower-left to
/// upper-right diagonal. Edges on `gamma1_sides` are tagged Gamma1, the rest Gamma2.
Mesh build_rectangle_mesh(Index nx, Index ny, const Rectangle& domain, SideSet gamma1_sides);

/// Red refinement: each triangle is split into four congruent children through
/// its edge midpoints. Boundary tags are inherited and vertices renumbered row-major.
Mesh refine_uniform(const Mesh& mesh);

/// Longest triangle side over the mesh.
double mesh_size(const Mesh& mesh);

double triangle_area(const Mesh& mesh, Index t);

/// Nodal P1 interpolant of `f`. Throws std::domain_error on a non-finite value.
StateField interpolate(const Mesh& mesh, const std::function<double(const Point&)>& f);

/// Value of the P1 field at `p`, which must lie in the closed domain.
double evaluate(const Mesh& mesh, const Vector& field, const Point& p);

/// Transfers a field from `coarse` onto the vertices of `fine` by P1
/// evaluation. Exact when `fine` is a refinement of `coarse`.
Vector prolongate(const Mesh& coarse, const Vector& field, const Mesh& fine);

/// Plain-text export. Layout:
///   vertices N / "index x y" lines, triangles T / "index v0 v1 v2" lines,
///   edges E / "index v0 v1 tag" lines with tag 1 (Gamma1) or 2 (Gamma2).
void write_mesh(std::ostream& os, const Mesh& mesh);

} // namespace vioc

#endif // VIOC_MESH_HPP
