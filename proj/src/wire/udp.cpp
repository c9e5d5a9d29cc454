#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include <fmt/format.h>

#include "neuroeco/wire.hpp"

namespace neuroeco {
namespace {

sockaddr_in make_addr(std::string_view host, std::uint16_t port) {
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    const std::string h(host == "localhost" ? "127.0.0.1" : host);
    if (inet_pton(AF_INET, h.c_str(), &addr.sin_addr) != 1) {
        throw WireError(fmt::format("not an IPv4 address: '{}'", h));
    }
    return addr;
}

}  // namespace

UdpOscSocket::UdpOscSocket(std::uint16_t bind_port, std::string_view bind_host) {
    fd_ = ::socket(AF_INET, SOCK_DGRAM, 0);
    if (fd_ < 0) throw WireError(fmt::format("socket: {}", std::strerror(errno)));
    const auto addr = make_addr(bind_host, bind_port);
    if (::bind(fd_, reinterpret_cast<const sockaddr*>(&addr), sizeof addr) != 0) {
        const int err = errno;
        ::close(fd_);
        throw WireError(fmt::format("cannot bind UDP {}:{}: {}", bind_host, bind_port, std::strerror(err)));
    }
    sockaddr_in bound{};
    socklen_t len = sizeof bound;
    ::getsockname(fd_, reinterpret_cast<sockaddr*>(&bound), &len);
    port_ = ntohs(bound.sin_port);
}

UdpOscSocket::~UdpOscSocket() {
    if (fd_ >= 0) ::close(fd_);
}

void UdpOscSocket::send_to(const OscMessage& msg, std::string_view host, std::uint16_t port) {
    const auto bytes = osc_encode(msg);
    const auto addr = make_addr(host, port);
    const auto n = ::sendto(fd_, bytes.data(), bytes.size(), 0, reinterpret_cast<const sockaddr*>(&addr), sizeof addr);
    if (n < 0) throw WireError(fmt::format("sendto: {}", std::strerror(errno)));
}

std::optional<OscMessage> UdpOscSocket::receive(int timeout_ms) {
    pollfd p{fd_, POLLIN, 0};
    if (::poll(&p, 1, timeout_ms) <= 0) return std::nullopt;
    std::vector<std::uint8_t> buf(65536);
    const auto n = ::recv(fd_, buf.data(), buf.size(), 0);
    if (n < 0) throw WireError(fmt::format("recv: {}", std::strerror(errno)));
    buf.resize(static_cast<std::size_t>(n));
    return osc_decode(buf);
}

}  // namespace neuroeco
