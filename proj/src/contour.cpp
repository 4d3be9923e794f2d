#include "madm/contour.hpp"

#include <cmath>
#include <numbers>

#include "madm/errors.hpp"

namespace madm {

Quadrature& Quadrature::append(const Quadrature& other) {
    nodes.insert(nodes.end(), other.nodes.begin(), other.nodes.end());
    weights.insert(weights.end(), other.weights.begin(), other.weights.end());
    return *this;
}

Quadrature trapezoid(const ContourSpec& c) { return clustered_trapezoid(c, 0.0); }

Quadrature clustered_trapezoid(const ContourSpec& c, double a) {
    require(c.nodes >= 1, "contour needs at least one node");
    require(c.radius > 0, "contour radius must be positive");
    require(c.orientation == 1 || c.orientation == -1, "orientation must be +1 or -1");
    require(a >= 0 && a < 1, "clustering parameter must lie in [0, 1)");
    Quadrature q;
    q.nodes.resize(c.nodes);
    q.weights.resize(c.nodes);
    const double M = c.nodes;
    for (int j = 0; j < c.nodes; ++j) {
        const double s = 2.0 * std::numbers::pi * j / M;
        const double th = s - a * std::sin(s);
        const cplx off = std::polar(c.radius, th);
        q.nodes[j] = c.center + off;
        q.weights[j] = double(c.orientation) * off * (1.0 - a * std::cos(s)) / M;
    }
    return q;
}

}  // namespace madm
