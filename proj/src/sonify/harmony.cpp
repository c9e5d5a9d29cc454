#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

#include "neuroeco/sonify.hpp"

namespace neuroeco {

Chord parse_chord(std::string_view name) {
    static constexpr int kNatural[] = {9, 11, 0, 2, 4, 5, 7};  // A..G
    if (name.empty()) throw std::invalid_argument("empty chord name");
    const char letter = static_cast<char>(std::toupper(static_cast<unsigned char>(name[0])));
    if (letter < 'A' || letter > 'G') throw std::invalid_argument(fmt::format("bad chord '{}'", name));
    int root = kNatural[letter - 'A'];
    std::size_t i = 1;
    if (i < name.size() && (name[i] == 'b' || name[i] == '#')) {
        root += name[i] == 'b' ? -1 : 1;
        ++i;
    }
    root = (root + 12) % 12;
    bool minor = false;
    if (i < name.size() && name[i] == 'm') {
        minor = true;
        ++i;
    }
    if (i != name.size()) throw std::invalid_argument(fmt::format("bad chord '{}'", name));
    Chord c;
    c.name = std::string(name);
    c.root = root;
    c.pitch_classes = {root, (root + (minor ? 3 : 4)) % 12, (root + 7) % 12};
    return c;
}

HarmonicState::HarmonicState(std::vector<Chord> progression) : progression_(std::move(progression)) {
    if (progression_.empty()) throw std::invalid_argument("progression must not be empty");
    if (progression_.front().root != 0) throw std::invalid_argument("progression must start on C");
    if (std::none_of(progression_.begin(), progression_.end(), [](const Chord& c) { return c.root == 1; })) {
        throw std::invalid_argument("progression needs a D-flat rooted chord");
    }
    // Spread the 52 samples over the chords; each chord's share walks its
    // chord tones upward from octave 2.
    const std::size_t n = progression_.size();
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t share = kPitchTableSize / n + (k < kPitchTableSize % n ? 1 : 0);
        const auto& pcs = progression_[k].pitch_classes;
        if (pcs.empty()) throw std::invalid_argument("chord without pitch classes");
        for (std::size_t j = 0; j < share; ++j) {
            PitchEntry e;
            e.index = static_cast<std::uint32_t>(table_.size());
            e.pitch_class = pcs[j % pcs.size()];
            e.chord = static_cast<std::uint32_t>(k);
            e.octave = 2 + static_cast<int>(j / pcs.size());
            table_.push_back(e);
        }
    }
}

HarmonicState HarmonicState::c_minor_phrygian() {
    return HarmonicState({parse_chord("Cm"), parse_chord("Ab"), parse_chord("Db"), parse_chord("Bbm")});
}

std::vector<std::uint32_t> HarmonicState::current_entries() const {
    std::vector<std::uint32_t> out;
    for (const auto& e : table_) {
        if (e.chord == chord_index_) out.push_back(e.index);
    }
    return out;
}

double HarmonicState::root_hz() const {
    const int midi = 48 + current().root;
    return 440.0 * std::pow(2.0, (midi - 69) / 12.0);
}

}  // namespace neuroeco
