#pragma once

#include "sigverify/harness.hpp"

#include <optional>
#include <random>
#include <vector>

namespace testing {

using namespace sigverify;

/// Fully connected net with `activation` after every hidden affine layer.
inline Network random_mlp(std::mt19937_64 &rng, const std::vector<int> &widths, const Layer &activation,
                          double scale = 1.0)
{
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<Layer> layers;
    for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
        Matrix w(widths[i + 1], widths[i]);
        Vector b(widths[i + 1]);
        for (Eigen::Index r = 0; r < w.rows(); ++r) {
            for (Eigen::Index c = 0; c < w.cols(); ++c)
                w(r, c) = scale * normal(rng);
            b[r] = 0.5 * scale * normal(rng);
        }
        layers.emplace_back(AffineLayer{w, b});
        if (i + 2 < widths.size())
            layers.push_back(activation);
    }
    return Network(widths.front(), std::move(layers));
}

inline Vector sample_box(std::mt19937_64 &rng, const InputBox &box)
{
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Vector x(box.dim());
    for (int i = 0; i < box.dim(); ++i)
        x[i] = box.lo[i] + unif(rng) * (box.hi[i] - box.lo[i]);
    return x;
}

/// First grid point (row-major over a box of dimension <= 3) whose output breaks the property.
inline std::optional<Vector> grid_flip(const Network &net, const Property &prop, int points)
{
    const int d = prop.input.dim();
    std::vector<int> idx(d, 0);
    Vector x(d);
    for (;;) {
        for (int i = 0; i < d; ++i)
            x[i] = points == 1 ? prop.input.lo[i]
                               : prop.input.lo[i] + (prop.input.hi[i] - prop.input.lo[i]) * idx[i] / (points - 1);
        if (flipped_label(prop, evaluate(net, x)))
            return x;
        int i = 0;
        while (i < d && ++idx[i] == points)
            idx[i++] = 0;
        if (i == d)
            return std::nullopt;
    }
}

inline Network one_sigmoid_pair(double a, double b, double margin)
{
    // v1 = a x, v2 = b x; y0 = σ(v2) + margin, y1 = σ(v1)
    Matrix w1(2, 1);
    w1 << a, b;
    Matrix w2(2, 2);
    w2 << 0, 1, 1, 0;
    Vector b2(2);
    b2 << margin, 0;
    return Network(1, {AffineLayer{w1, Vector::Zero(2)}, SShapedLayer{SShapedKind::Sigmoid}, AffineLayer{w2, b2}});
}

/// Robust on x ∈ [0, 1], yet the initial relaxation admits a spurious
/// counterexample that one refinement removes.
inline Instance spurious_fixture()
{
    Property prop{InputBox{Vector::Zero(1), Vector::Ones(1)}, 0, {1}};
    return make_instance("spurious", one_sigmoid_pair(1.0, 2.0, 0.03), prop);
}

}  // namespace testing
