#include "neuroeco/dataset.hpp"

#include <fmt/format.h>

namespace neuroeco {

SpikeRaster::SpikeRaster(std::size_t rows, std::size_t channels, std::uint32_t dt_ms)
    : rows_(rows), channels_(channels), dt_ms_(dt_ms), cells_(rows * channels, 0) {
    if (rows == 0 || channels == 0) throw std::invalid_argument("raster needs >= 1 row and channel");
    if (dt_ms == 0) throw std::invalid_argument("raster dt must be positive");
}

std::uint64_t SpikeRaster::total_spikes() const {
    std::uint64_t n = 0;
    for (auto c : cells_) n += c;
    return n;
}

std::vector<std::uint64_t> SpikeRaster::channel_counts() const {
    std::vector<std::uint64_t> counts(channels_, 0);
    for (std::size_t r = 0; r < rows_; ++r) {
        const auto cells = row(r);
        for (std::size_t c = 0; c < channels_; ++c) counts[c] += cells[c];
    }
    return counts;
}

std::vector<std::uint32_t> SpikeRaster::row_counts() const {
    std::vector<std::uint32_t> counts(rows_, 0);
    for (std::size_t r = 0; r < rows_; ++r) {
        std::uint32_t n = 0;
        for (auto c : row(r)) n += c;
        counts[r] = n;
    }
    return counts;
}

namespace {

std::string located(const std::string& what, std::size_t line, std::size_t column) {
    if (line == 0) return what;
    if (column == 0) return fmt::format("{} (line {})", what, line);
    return fmt::format("{} (line {}, column {})", what, line, column);
}

}  // namespace

DatasetError::DatasetError(const std::string& what, std::size_t line, std::size_t column)
    : std::runtime_error(located(what, line, column)), line_(line), column_(column) {}

}  // namespace neuroeco
