#pragma once

#include <cstddef>
#include <string_view>

namespace neuroeco::kernels {

/// Neighbor statistics for one boid against a population, in toroidal
/// minimum-image coordinates relative to the focal boid.
struct NeighborSums {
    double count = 0;       // boids with 0 < d^2 < r_neighbor^2
    double offset_x = 0;    // sum of dx over neighbors
    double offset_y = 0;
    double vel_x = 0;       // sum of neighbor velocities
    double vel_y = 0;
    double sep_x = 0;       // sum of -d / |d|^2 over 0 < d^2 < r_sep^2
    double sep_y = 0;
};

struct NeighborQuery {
    double x, y;
    double world_w, world_h;
    double r_neighbor2, r_sep2;
};

/// One implementation of every data-parallel inner loop. Scalar and AVX2
/// tables agree bit-for-bit on the elementwise kernels; the reductions
/// (dot, neighbor_sums) agree to rounding.
struct KernelTable {
    std::string_view name;

    /// dst[x] = (src[x-1] + src[x]) + src[x+1], wrapping at both ends. n >= 3.
    void (*row_sum3)(const double* src, double* dst, std::size_t n);
    /// dst[x] = ((a[x] + b[x]) + c[x]) * scale.
    void (*col_sum3_scale)(const double* a, const double* b, const double* c, double* dst,
                           std::size_t n, double scale);
    /// dst[i] += a * src[i].
    void (*add_scaled)(double* dst, const double* src, double a, std::size_t n);
    double (*dot)(const double* a, const double* b, std::size_t n);
    /// Accumulates into `out`; xs/ys/vxs/vys are structure-of-arrays of length n.
    void (*neighbor_sums)(const NeighborQuery& q, const double* xs, const double* ys,
                          const double* vxs, const double* vys, std::size_t n,
                          NeighborSums& out);
};

const KernelTable& scalar();
/// Null when the CPU or the build lacks AVX2.
const KernelTable* avx2();

/// The table in use: AVX2 when available, unless SN_SIMD=scalar is set or
/// select() overrides it.
const KernelTable& active();

enum class Isa { automatic, scalar, avx2 };
/// Returns false if the requested ISA is unavailable (active table unchanged).
bool select(Isa isa);

}  // namespace neuroeco::kernels
