#include <bit>
#include <cstring>

#include <fmt/format.h>

#include "neuroeco/wire.hpp"

namespace neuroeco {
namespace {

std::size_t padded(std::size_t n) { return (n + 3) & ~std::size_t{3}; }

void put_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

void put_string(std::vector<std::uint8_t>& out, std::string_view s) {
    out.insert(out.end(), s.begin(), s.end());
    out.resize(out.size() + padded(s.size() + 1) - s.size(), 0);
}

void put_blob(std::vector<std::uint8_t>& out, const Blob& b) {
    put_be32(out, static_cast<std::uint32_t>(b.bytes.size()));
    out.insert(out.end(), b.bytes.begin(), b.bytes.end());
    out.resize(out.size() + padded(b.bytes.size()) - b.bytes.size(), 0);
}

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::size_t offset() const { return pos_; }
    bool done() const { return pos_ == bytes_.size(); }

    std::uint32_t be32() {
        need(4);
        const auto* p = bytes_.data() + pos_;
        pos_ += 4;
        return std::uint32_t(p[0]) << 24 | std::uint32_t(p[1]) << 16 | std::uint32_t(p[2]) << 8 | p[3];
    }

    std::string string() {
        const std::size_t start = pos_;
        std::size_t end = start;
        while (end < bytes_.size() && bytes_[end] != 0) ++end;
        if (end == bytes_.size()) throw OscError(OscErrorKind::truncated, start, "unterminated string");
        std::string s(reinterpret_cast<const char*>(bytes_.data() + start), end - start);
        pos_ = end;
        skip_padding(start + padded(end - start + 1));
        return s;
    }

    Blob blob() {
        const std::size_t at = pos_;
        const std::size_t size = be32();
        if (size > bytes_.size() - pos_) throw OscError(OscErrorKind::truncated, at, "blob longer than buffer");
        Blob b;
        b.bytes.assign(bytes_.begin() + static_cast<std::ptrdiff_t>(pos_),
                       bytes_.begin() + static_cast<std::ptrdiff_t>(pos_ + size));
        pos_ += size;
        skip_padding(at + 4 + padded(size));
        return b;
    }

private:
    void need(std::size_t n) {
        if (bytes_.size() - pos_ < n) throw OscError(OscErrorKind::truncated, pos_);
    }

    // Padding must exist and be zero up to `until`.
    void skip_padding(std::size_t until) {
        if (until > bytes_.size()) throw OscError(OscErrorKind::truncated, bytes_.size(), "missing padding");
        for (; pos_ < until; ++pos_) {
            if (bytes_[pos_] != 0) throw OscError(OscErrorKind::misaligned_padding, pos_);
        }
    }

    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

std::string_view to_string(OscErrorKind kind) {
    switch (kind) {
        case OscErrorKind::truncated: return "truncated";
        case OscErrorKind::misaligned_padding: return "misaligned padding";
        case OscErrorKind::unknown_type_tag: return "unknown type tag";
        case OscErrorKind::bad_address: return "bad address";
        case OscErrorKind::bad_argument: return "bad argument";
        case OscErrorKind::trailing_data: return "trailing data";
    }
    return "unknown";
}

OscError::OscError(OscErrorKind kind, std::size_t offset, const std::string& detail)
    : std::runtime_error(detail.empty() ? fmt::format("{} at byte {}", to_string(kind), offset)
                                        : fmt::format("{} at byte {}: {}", to_string(kind), offset, detail)),
      kind_(kind),
      offset_(offset) {}

std::vector<std::uint8_t> osc_encode(const OscMessage& msg) {
    if (msg.address.empty() || msg.address.front() != '/') {
        throw OscError(OscErrorKind::bad_address, 0, "address must start with '/'");
    }
    if (msg.address.find('\0') != std::string::npos) {
        throw OscError(OscErrorKind::bad_address, 0, "address contains NUL");
    }
    std::string tags = ",";
    for (const auto& arg : msg.args) {
        tags.push_back(std::visit(
            [](const auto& v) -> char {
                using T = std::decay_t<decltype(v)>;
                if constexpr (std::is_same_v<T, std::int32_t>) return 'i';
                else if constexpr (std::is_same_v<T, float>) return 'f';
                else if constexpr (std::is_same_v<T, std::string>) return 's';
                else return 'b';
            },
            arg));
    }

    std::vector<std::uint8_t> out;
    out.reserve(padded(msg.address.size() + 1) + padded(tags.size() + 1) + 8 * msg.args.size());
    put_string(out, msg.address);
    put_string(out, tags);
    for (std::size_t i = 0; i < msg.args.size(); ++i) {
        const auto& arg = msg.args[i];
        if (const auto* v = std::get_if<std::int32_t>(&arg)) {
            put_be32(out, static_cast<std::uint32_t>(*v));
        } else if (const auto* f = std::get_if<float>(&arg)) {
            put_be32(out, std::bit_cast<std::uint32_t>(*f));
        } else if (const auto* s = std::get_if<std::string>(&arg)) {
            if (s->find('\0') != std::string::npos) {
                throw OscError(OscErrorKind::bad_argument, out.size(), fmt::format("string argument {} contains NUL", i));
            }
            put_string(out, *s);
        } else {
            put_blob(out, std::get<Blob>(arg));
        }
    }
    return out;
}

OscMessage osc_decode(std::span<const std::uint8_t> bytes) {
    if (bytes.empty()) throw OscError(OscErrorKind::truncated, 0, "empty buffer");
    if (bytes.size() % 4 != 0) {
        throw OscError(OscErrorKind::misaligned_padding, bytes.size(), "length not a multiple of 4");
    }
    Reader in(bytes);
    OscMessage msg;
    if (bytes[0] != '/') throw OscError(OscErrorKind::bad_address, 0, "address must start with '/'");
    msg.address = in.string();
    if (in.done()) throw OscError(OscErrorKind::truncated, in.offset(), "missing type tag string");
    const std::size_t tag_offset = in.offset();
    if (bytes[tag_offset] != ',') throw OscError(OscErrorKind::unknown_type_tag, tag_offset, "type tags must start with ','");
    const std::string tags = in.string();
    for (std::size_t i = 1; i < tags.size(); ++i) {
        switch (tags[i]) {
            case 'i': msg.args.emplace_back(static_cast<std::int32_t>(in.be32())); break;
            case 'f': msg.args.emplace_back(std::bit_cast<float>(in.be32())); break;
            case 's': msg.args.emplace_back(in.string()); break;
            case 'b': msg.args.emplace_back(in.blob()); break;
            default:
                throw OscError(OscErrorKind::unknown_type_tag, tag_offset + i,
                               fmt::format("'{}'", tags[i]));
        }
    }
    if (!in.done()) throw OscError(OscErrorKind::trailing_data, in.offset());
    return msg;
}

}  // namespace neuroeco
