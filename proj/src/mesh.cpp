#include "vioc/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <ostream>

namespace vioc {

Side parse_side(const std::string& name)
{
    if (name == "left") return Side::Left;
    if (name == "right") return Side::Right;
    if (name == "bottom") return Side::Bottom;
    if (name == "top") return Side::Top;
    throw std::invalid_argument("unknown rectangle side '" + name + "'");
}

const char* side_name(Side s)
{
    switch (s) {
    case Side::Left: return "left";
    case Side::Right: return "right";
    case Side::Bottom: return "bottom";
    case Side::Top: return "top";
    }
    return "?";
}

Mesh build_rectangle_mesh(Index nx, Index ny, const Rectangle& domain, SideSet gamma1_sides)
{
    if (nx < 1 || ny < 1)
        throw std::invalid_argument("build_rectangle_mesh: nx and ny must be >= 1");
    if (gamma1_sides.empty())
        throw std::invalid_argument("build_rectangle_mesh: Gamma1 must contain at least one side");
    if (!(domain.x1 > domain.x0) || !(domain.y1 > domain.y0))
        throw std::invalid_argument("build_rectangle_mesh: empty rectangle");

    Mesh mesh;
    mesh.domain = domain;
    mesh.gamma1_sides = gamma1_sides;
    mesh.nx = nx;
    mesh.ny = ny;

    const auto id = [nx](Index i, Index j) { return j * (nx + 1) + i; };
    const double dx = (domain.x1 - domain.x0) / static_cast<double>(nx);
    const double dy = (domain.y1 - domain.y0) / static_cast<double>(ny);

    mesh.vertices.reserve(static_cast<std::size_t>((nx + 1) * (ny + 1)));
    for (Index j = 0; j <= ny; ++j) {
        const double y = j == ny ? domain.y1 : domain.y0 + static_cast<double>(j) * dy;
        for (Index i = 0; i <= nx; ++i) {
            const double x = i == nx ? domain.x1 : domain.x0 + static_cast<double>(i) * dx;
            mesh.vertices.emplace_back(x, y);
        }
    }

    mesh.triangles.reserve(static_cast<std::size_t>(2 * nx * ny));
    for (Index j = 0; j < ny; ++j) {
        for (Index i = 0; i < nx; ++i) {
            const Index v00 = id(i, j), v10 = id(i + 1, j);
            const Index v01 = id(i, j + 1), v11 = id(i + 1, j + 1);
            mesh.triangles.push_back({v00, v10, v11});
            mesh.triangles.push_back({v00, v11, v01});
        }
    }

    const auto tag_of = [&](Side s) {
        return gamma1_sides.contains(s) ? BoundaryTag::Gamma1 : BoundaryTag::Gamma2;
    };
    for (Index i = 0; i < nx; ++i) {
        mesh.boundary_edges.push_back({{id(i, 0), id(i + 1, 0)}, tag_of(Side::Bottom)});
        mesh.boundary_edges.push_back({{id(i + 1, ny), id(i, ny)}, tag_of(Side::Top)});
    }
    for (Index j = 0; j < ny; ++j) {
        mesh.boundary_edges.push_back({{id(nx, j), id(nx, j + 1)}, tag_of(Side::Right)});
        mesh.boundary_edges.push_back({{id(0, j + 1), id(0, j)}, tag_of(Side::Left)});
    }

    mesh.h = mesh_size(mesh);
    return mesh;
}

Mesh refine_uniform(const Mesh& mesh)
{
    if (mesh.triangles.empty())
        throw std::invalid_argument("refine_uniform: empty mesh");

    std::vector<Point> vertices = mesh.vertices;
    std::map<std::pair<Index, Index>, Index> midpoint;
    const auto mid = [&](Index a, Index b) {
        const auto key = std::minmax(a, b);
        auto it = midpoint.find(key);
        if (it != midpoint.end()) return it->second;
        const Index m = static_cast<Index>(vertices.size());
        const Point& pa = vertices[static_cast<std::size_t>(key.first)];
        const Point& pb = vertices[static_cast<std::size_t>(key.second)];
        vertices.push_back(0.5 * (pa + pb));
        midpoint.emplace(key, m);
        return m;
    };

    std::vector<std::array<Index, 3>> triangles;
    triangles.reserve(4 * mesh.triangles.size());
    for (const auto& t : mesh.triangles) {
        const Index m01 = mid(t[0], t[1]);
        const Index m12 = mid(t[1], t[2]);
        const Index m20 = mid(t[2], t[0]);
        triangles.push_back({t[0], m01, m20});
        triangles.push_back({m01, t[1], m12});
        triangles.push_back({m20, m12, t[2]});
        triangles.push_back({m01, m12, m20});
    }

    std::vector<BoundaryEdge> edges;
    edges.reserve(2 * mesh.boundary_edges.size());
    for (const auto& e : mesh.boundary_edges) {
        const Index m = mid(e.vertices[0], e.vertices[1]);
        edges.push_back({{e.vertices[0], m}, e.tag});
        edges.push_back({{m, e.vertices[1]}, e.tag});
    }

    // Renumber row-major: sort by (y, x). Vertices of one grid row share a
    // bit-identical y because every midpoint of a row is computed from that row.
    std::vector<Index> order(vertices.size());
    std::iota(order.begin(), order.end(), Index{0});
    std::sort(order.begin(), order.end(), [&](Index a, Index b) {
        const Point& pa = vertices[static_cast<std::size_t>(a)];
        const Point& pb = vertices[static_cast<std::size_t>(b)];
        return pa.y() < pb.y() || (pa.y() == pb.y() && pa.x() < pb.x());
    });
    std::vector<Index> new_id(vertices.size());
    for (std::size_t k = 0; k < order.size(); ++k)
        new_id[static_cast<std::size_t>(order[k])] = static_cast<Index>(k);

    Mesh fine;
    fine.domain = mesh.domain;
    fine.gamma1_sides = mesh.gamma1_sides;
    fine.nx = 2 * mesh.nx;
    fine.ny = 2 * mesh.ny;
    fine.level = mesh.level + 1;
    fine.vertices.reserve(vertices.size());
    for (Index v : order) fine.vertices.push_back(vertices[static_cast<std::size_t>(v)]);
    for (auto t : triangles) {
        for (auto& v : t) v = new_id[static_cast<std::size_t>(v)];
        fine.triangles.push_back(t);
    }
    for (auto e : edges) {
        for (auto& v : e.vertices) v = new_id[static_cast<std::size_t>(v)];
        fine.boundary_edges.push_back(e);
    }
    if (fine.num_vertices() != (fine.nx + 1) * (fine.ny + 1))
        throw std::invalid_argument("refine_uniform: input is not a structured rectangle mesh");

    fine.h = mesh_size(fine);
    return fine;
}

double mesh_size(const Mesh& mesh)
{
    if (mesh.triangles.empty())
        throw std::invalid_argument("mesh_size: mesh has no triangles");
    double h = 0.0;
    for (const auto& t : mesh.triangles) {
        for (int k = 0; k < 3; ++k) {
            const Point& a = mesh.vertices[static_cast<std::size_t>(t[k])];
            const Point& b = mesh.vertices[static_cast<std::size_t>(t[(k + 1) % 3])];
            h = std::max(h, (a - b).norm());
        }
    }
    return h;
}

double triangle_area(const Mesh& mesh, Index t)
{
    const auto& tri = mesh.triangles[static_cast<std::size_t>(t)];
    const Point& a = mesh.vertices[static_cast<std::size_t>(tri[0])];
    const Point& b = mesh.vertices[static_cast<std::size_t>(tri[1])];
    const Point& c = mesh.vertices[static_cast<std::size_t>(tri[2])];
    const Point ab = b - a, ac = c - a;
    return 0.5 * (ab.x() * ac.y() - ab.y() * ac.x());
}

StateField interpolate(const Mesh& mesh, const std::function<double(const Point&)>& f)
{
    StateField values(mesh.num_vertices());
    for (Index i = 0; i < mesh.num_vertices(); ++i) {
        const double v = f(mesh.vertices[static_cast<std::size_t>(i)]);
        if (!std::isfinite(v))
            throw std::domain_error("interpolate: non-finite value at vertex " + std::to_string(i));
        values[i] = v;
    }
    return values;
}

double evaluate(const Mesh& mesh, const Vector& field, const Point& p)
{
    if (field.size() != mesh.num_vertices())
        throw std::invalid_argument("evaluate: field size does not match mesh");
    const Rectangle& d = mesh.domain;
    const double dx = (d.x1 - d.x0) / static_cast<double>(mesh.nx);
    const double dy = (d.y1 - d.y0) / static_cast<double>(mesh.ny);
    const auto cell = [](double coord, double origin, double step, Index n) {
        const auto c = static_cast<Index>(std::floor((coord - origin) / step));
        return std::clamp<Index>(c, 0, n - 1);
    };
    const Index i = cell(p.x(), d.x0, dx, mesh.nx);
    const Index j = cell(p.y(), d.y0, dy, mesh.ny);
    const Point& lower_left = mesh.vertices[static_cast<std::size_t>(j * (mesh.nx + 1) + i)];
    const Point& upper_right = mesh.vertices[static_cast<std::size_t>((j + 1) * (mesh.nx + 1) + i + 1)];
    const double s = (p.x() - lower_left.x()) / (upper_right.x() - lower_left.x());
    const double t = (p.y() - lower_left.y()) / (upper_right.y() - lower_left.y());

    const auto at = [&](Index ii, Index jj) { return field[jj * (mesh.nx + 1) + ii]; };
    const double u00 = at(i, j), u10 = at(i + 1, j), u01 = at(i, j + 1), u11 = at(i + 1, j + 1);
    if (t <= s) return u00 + s * (u10 - u00) + t * (u11 - u10);
    return u00 + t * (u01 - u00) + s * (u11 - u01);
}

Vector prolongate(const Mesh& coarse, const Vector& field, const Mesh& fine)
{
    if (!(coarse.domain.x0 == fine.domain.x0 && coarse.domain.x1 == fine.domain.x1 &&
          coarse.domain.y0 == fine.domain.y0 && coarse.domain.y1 == fine.domain.y1))
        throw std::invalid_argument("prolongate: meshes cover different domains");
    if (fine.nx % coarse.nx != 0 || fine.ny % coarse.ny != 0)
        throw std::invalid_argument("prolongate: meshes are not nested");
    Vector out(fine.num_vertices());
    for (Index v = 0; v < fine.num_vertices(); ++v)
        out[v] = evaluate(coarse, field, fine.vertices[static_cast<std::size_t>(v)]);
    return out;
}

void write_mesh(std::ostream& os, const Mesh& mesh)
{
    const auto old_precision = os.precision(17);
    os << "vertices " << mesh.num_vertices() << '\n';
    for (Index i = 0; i < mesh.num_vertices(); ++i) {
        const Point& p = mesh.vertices[static_cast<std::size_t>(i)];
        os << i << ' ' << p.x() << ' ' << p.y() << '\n';
    }
    os << "triangles " << mesh.num_triangles() << '\n';
    for (Index t = 0; t < mesh.num_triangles(); ++t) {
        const auto& tri = mesh.triangles[static_cast<std::size_t>(t)];
        os << t << ' ' << tri[0] << ' ' << tri[1] << ' ' << tri[2] << '\n';
    }
    os << "edges " << mesh.boundary_edges.size() << '\n';
    for (std::size_t e = 0; e < mesh.boundary_edges.size(); ++e) {
        const auto& edge = mesh.boundary_edges[e];
        os << e << ' ' << edge.vertices[0] << ' ' << edge.vertices[1] << ' '
           << (edge.tag == BoundaryTag::Gamma1 ? 1 : 2) << '\n';
    }
    os.precision(old_precision);
}

} // namespace vioc
