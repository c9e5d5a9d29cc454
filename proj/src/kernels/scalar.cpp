#include "neuroeco/kernels.hpp"

#include "neighbor_pair.hpp"

namespace neuroeco::kernels {
namespace {

void row_sum3(const double* src, double* dst, std::size_t n) {
    dst[0] = (src[n - 1] + src[0]) + src[1];
    for (std::size_t x = 1; x + 1 < n; ++x) dst[x] = (src[x - 1] + src[x]) + src[x + 1];
    dst[n - 1] = (src[n - 2] + src[n - 1]) + src[0];
}

void col_sum3_scale(const double* a, const double* b, const double* c, double* dst,
                    std::size_t n, double scale) {
    for (std::size_t x = 0; x < n; ++x) dst[x] = ((a[x] + b[x]) + c[x]) * scale;
}

void add_scaled(double* dst, const double* src, double a, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) dst[i] += a * src[i];
}

double dot(const double* a, const double* b, std::size_t n) {
    double s = 0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

void neighbor_sums(const NeighborQuery& q, const double* xs, const double* ys,
                   const double* vxs, const double* vys, std::size_t n, NeighborSums& out) {
    for (std::size_t j = 0; j < n; ++j) accumulate_pair(q, xs[j], ys[j], vxs[j], vys[j], out);
}

}  // namespace

const KernelTable& scalar() {
    static const KernelTable table{"scalar", row_sum3, col_sum3_scale, add_scaled, dot,
                                   neighbor_sums};
    return table;
}

}  // namespace neuroeco::kernels
