#ifndef VIOC_TEST_SUPPORT_HPP
#define VIOC_TEST_SUPPORT_HPP

#include "vioc/harness.hpp"

#include <map>
#include <random>

namespace vioc::testing {

inline Mesh unit_square(Index n, SideSet gamma1 = {Side::Left})
{
    return build_rectangle_mesh(n, n, Rectangle{}, gamma1);
}

inline ScalarFunction constant(double c)
{
    return [c](const Point&) { return c; };
}

inline Vector uniform_vector(std::mt19937_64& rng, Index n, double lo, double hi)
{
    std::uniform_real_distribution<double> dist(lo, hi);
    Vector v(n);
    for (Index i = 0; i < n; ++i) v[i] = dist(rng);
    return v;
}

/// Edge -> number of triangles containing it.
inline std::map<std::pair<Index, Index>, int> edge_counts(const Mesh& mesh)
{
    std::map<std::pair<Index, Index>, int> counts;
    for (const auto& t : mesh.triangles)
        for (int k = 0; k < 3; ++k) ++counts[std::minmax(t[k], t[(k + 1) % 3])];
    return counts;
}

} // namespace vioc::testing

#endif // VIOC_TEST_SUPPORT_HPP
