#include "neuroeco/ecology.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "neuroeco/kernels.hpp"
#include "neuroeco/rng.hpp"

namespace neuroeco {

TrailField::TrailField(std::size_t width, std::size_t height)
    : width_(width), height_(height), values_(width * height, 0.0) {
    if (width < 3 || height < 3) throw std::invalid_argument("trail field must be at least 3x3");
}

double wrap_coord(double v, double extent) {
    if (v >= 0 && v < extent) return v;
    v = std::fmod(v, extent);
    if (v < 0) v += extent;
    return v < extent ? v : 0.0;
}

double wrap_angle(double a) {
    if (a >= 0 && a < kTwoPi) return a;
    a = std::fmod(a, kTwoPi);
    if (a < 0) a += kTwoPi;
    return a < kTwoPi ? a : 0.0;
}

std::size_t TrailField::wrapped_cell_index(double x, double y) const {
    const auto cx = static_cast<std::size_t>(wrap_coord(x, static_cast<double>(width_)));
    const auto cy = static_cast<std::size_t>(wrap_coord(y, static_cast<double>(height_)));
    return std::min(cy, height_ - 1) * width_ + std::min(cx, width_ - 1);
}

double TrailField::total() const {
    double s = 0;
    for (double v : values_) s += v;
    return s;
}

double TrailField::max() const {
    return values_.empty() ? 0.0 : *std::max_element(values_.begin(), values_.end());
}

void field_diffuse_decay(TrailField& field, double decay) {
    if (!(decay > 0.0 && decay <= 1.0)) throw std::invalid_argument("decay must lie in (0, 1]");
    const auto& k = kernels::active();
    const std::size_t w = field.width(), h = field.height();
    double* v = field.values().data();
    const double scale = decay / 9.0;

    // Horizontal sums for rows y-1, y, y+1 plus row 0 (needed again for the
    // last row after it has been overwritten). Output is written in place.
    std::vector<double> scratch(4 * w);
    double* first = scratch.data();
    double* prev = first + w;
    double* cur = prev + w;
    double* next = cur + w;
    k.row_sum3(v, first, w);
    k.row_sum3(v + (h - 1) * w, prev, w);
    std::copy(first, first + w, cur);
    for (std::size_t y = 0; y < h; ++y) {
        if (y + 1 < h) {
            k.row_sum3(v + (y + 1) * w, next, w);
        } else {
            std::copy(first, first + w, next);
        }
        k.col_sum3_scale(prev, cur, next, v + y * w, w, scale);
        std::swap(prev, cur);
        std::swap(cur, next);
    }
}

}  // namespace neuroeco
