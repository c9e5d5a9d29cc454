#pragma once

#include "neuroeco/kernels.hpp"

namespace neuroeco::kernels {

inline double min_image(double d, double extent) {
    const double half = 0.5 * extent;
    if (d > half) return d - extent;
    if (d < -half) return d + extent;
    return d;
}

inline void accumulate_pair(const NeighborQuery& q, double x, double y, double vx, double vy,
                            NeighborSums& out) {
    const double dx = min_image(x - q.x, q.world_w);
    const double dy = min_image(y - q.y, q.world_h);
    const double d2 = dx * dx + dy * dy;
    if (!(d2 > 0.0) || d2 >= q.r_neighbor2) return;
    out.count += 1.0;
    out.offset_x += dx;
    out.offset_y += dy;
    out.vel_x += vx;
    out.vel_y += vy;
    if (d2 < q.r_sep2) {
        out.sep_x -= dx / d2;
        out.sep_y -= dy / d2;
    }
}

}  // namespace neuroeco::kernels
