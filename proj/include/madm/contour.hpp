#pragma once

#include <vector>

#include "madm/model.hpp"

namespace madm {

struct ContourSpec {
    cplx center{0.0, 0.0};
    double radius = 1.0;
    int nodes = 64;
    int orientation = +1;  // +1 counterclockwise
};

// Nodes and weights with the 1/(2 pi i) factor folded into the weights,
// so sum_j w_j f(z_j) approximates (1/2 pi i) \oint f(z) dz.
struct Quadrature {
    std::vector<cplx> nodes;
    std::vector<cplx> weights;

    size_t size() const { return nodes.size(); }
    // Concatenation, used for contours made of several circles.
    Quadrature& append(const Quadrature& other);
};

// Periodic trapezoid rule: z_j = c + R e^{2 pi i j/M}, w_j = (z_j - c)/M.
Quadrature trapezoid(const ContourSpec& c);

// Trapezoid rule in s after the angle map theta = s - a sin(s), 0 <= a < 1.
// Concentrates nodes near the positive real axis, where the two-parameter
// kernel nearly touches its pole surface.
Quadrature clustered_trapezoid(const ContourSpec& c, double a);

}  // namespace madm
