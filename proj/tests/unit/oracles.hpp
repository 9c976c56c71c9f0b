#pragma once

#include "miloc/rng.hpp"
#include "miloc/wsol/localize.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <functional>
#include <vector>

namespace miloc::test {

inline wsol::BinaryMask random_mask(Rng& rng, Eigen::Index h, Eigen::Index w, double density)
{
    wsol::BinaryMask m(h, w);
    for (Eigen::Index r = 0; r < h; ++r)
        for (Eigen::Index c = 0; c < w; ++c)
            m(r, c) = rng.bernoulli(density);
    return m;
}

inline wsol::BoundingBox random_box(Rng& rng, int extent)
{
    const int x0 = static_cast<int>(rng.below(extent)), x1 = static_cast<int>(rng.below(extent));
    const int y0 = static_cast<int>(rng.below(extent)), y1 = static_cast<int>(rng.below(extent));
    return {std::min(x0, x1), std::min(y0, y1), std::max(x0, x1), std::max(y0, y1)};
}

// Window sums by explicit offset loops with bounds checks.
inline Eigen::MatrixXd naive_window_sum(const Eigen::MatrixXd& grid, int size)
{
    const int lo = (size - 1) / 2;
    Eigen::MatrixXd out(grid.rows(), grid.cols());
    for (Eigen::Index r = 0; r < grid.rows(); ++r)
        for (Eigen::Index c = 0; c < grid.cols(); ++c) {
            double total = 0.0;
            for (int dr = 0; dr < size; ++dr)
                for (int dc = 0; dc < size; ++dc) {
                    const Eigen::Index i = r - lo + dr, j = c - lo + dc;
                    if (i >= 0 && i < grid.rows() && j >= 0 && j < grid.cols())
                        total += grid(i, j);
                }
            out(r, c) = total;
        }
    return out;
}

// Recursive flood fill from every unvisited cell; keeps the first largest.
inline wsol::BinaryMask flood_fill_largest(const wsol::BinaryMask& mask)
{
    const auto h = mask.rows(), w = mask.cols();
    wsol::BinaryMask seen = wsol::BinaryMask::Constant(h, w, false);
    wsol::BinaryMask best = wsol::BinaryMask::Constant(h, w, false);
    long long best_size = 0;
    for (Eigen::Index r = 0; r < h; ++r)
        for (Eigen::Index c = 0; c < w; ++c) {
            if (!mask(r, c) || seen(r, c))
                continue;
            wsol::BinaryMask current = wsol::BinaryMask::Constant(h, w, false);
            long long size = 0;
            std::function<void(Eigen::Index, Eigen::Index)> fill = [&](Eigen::Index i, Eigen::Index j) {
                if (i < 0 || j < 0 || i >= h || j >= w || !mask(i, j) || seen(i, j))
                    return;
                seen(i, j) = true;
                current(i, j) = true;
                ++size;
                fill(i - 1, j);
                fill(i + 1, j);
                fill(i, j - 1);
                fill(i, j + 1);
            };
            fill(r, c);
            if (size > best_size) {
                best_size = size;
                best = current;
            }
        }
    return best;
}

// Counts pixels of a 0..extent-1 square canvas lying in both / either box.
inline double pixel_iou(const wsol::BoundingBox& a, const wsol::BoundingBox& b, int extent)
{
    long long inter = 0, uni = 0;
    for (int y = 0; y < extent; ++y)
        for (int x = 0; x < extent; ++x) {
            const bool in_a = a.contains(x, y), in_b = b.contains(x, y);
            inter += in_a && in_b;
            uni += in_a || in_b;
        }
    return static_cast<double>(inter) / static_cast<double>(uni);
}

} // namespace miloc::test
