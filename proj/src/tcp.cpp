#include "lft/tcp.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <thread>
#include <vector>

#include "lft/bytes.hpp"

namespace lft {

namespace {

using Clock = std::chrono::steady_clock;

constexpr char kMagic[4] = {'L', 'F', 'T', 'X'};
constexpr std::uint32_t kProtocolVersion = 1;

[[noreturn]] void throw_errno(const std::string& what) {
    throw ConnectionError(what + ": " + std::strerror(errno));
}

struct Fd {
    int fd = -1;
    Fd() = default;
    explicit Fd(int f) : fd(f) {}
    Fd(const Fd&) = delete;
    Fd& operator=(const Fd&) = delete;
    Fd(Fd&& other) noexcept : fd(other.fd) { other.fd = -1; }
    Fd& operator=(Fd&& other) noexcept {
        reset();
        fd = other.fd;
        other.fd = -1;
        return *this;
    }
    ~Fd() { reset(); }
    void reset() {
        if (fd >= 0) {
            ::close(fd);
            fd = -1;
        }
    }
    explicit operator bool() const { return fd >= 0; }
};

struct HostPort {
    std::string host;
    std::uint16_t port;
};

HostPort parse_host_port(const std::string& addr) {
    const auto colon = addr.rfind(':');
    if (colon == std::string::npos || colon + 1 == addr.size())
        throw ConfigError("address '" + addr + "' is not host:port");
    const std::string host = addr.substr(0, colon);
    const long port = std::strtol(addr.c_str() + colon + 1, nullptr, 10);
    if (port < 0 || port > 65535)
        throw ConfigError("port out of range in '" + addr + "'");
    return HostPort{host, static_cast<std::uint16_t>(port)};
}

sockaddr_in resolve(const HostPort& hp) {
    addrinfo hints{};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    const int rc = ::getaddrinfo(hp.host.c_str(), nullptr, &hints, &res);
    if (rc != 0 || res == nullptr)
        throw ConnectionError("cannot resolve host '" + hp.host + "': " +
                              ::gai_strerror(rc));
    sockaddr_in addr{};
    std::memcpy(&addr, res->ai_addr, sizeof(addr));
    ::freeaddrinfo(res);
    addr.sin_port = htons(hp.port);
    return addr;
}

Fd open_listener(const std::string& host, std::uint16_t port, std::uint16_t* actual_port) {
    Fd fd(::socket(AF_INET, SOCK_STREAM, 0));
    if (!fd)
        throw_errno("socket");
    int one = 1;
    ::setsockopt(fd.fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    sockaddr_in addr = resolve(HostPort{host, port});
    if (::bind(fd.fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0)
        throw_errno("bind " + host + ":" + std::to_string(port));
    if (::listen(fd.fd, 64) != 0)
        throw_errno("listen");
    if (actual_port != nullptr) {
        sockaddr_in bound{};
        socklen_t len = sizeof(bound);
        ::getsockname(fd.fd, reinterpret_cast<sockaddr*>(&bound), &len);
        *actual_port = ntohs(bound.sin_port);
    }
    return fd;
}

int remaining_ms(Clock::time_point deadline) {
    const auto left =
        std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
    return static_cast<int>(std::max<long long>(0, left.count()));
}

Fd accept_with_deadline(const Fd& listener, Clock::time_point deadline) {
    pollfd pfd{listener.fd, POLLIN, 0};
    for (;;) {
        const int rc = ::poll(&pfd, 1, remaining_ms(deadline));
        if (rc < 0) {
            if (errno == EINTR)
                continue;
            throw_errno("poll");
        }
        if (rc == 0)
            throw ConnectionError("handshake timeout waiting for a connection");
        Fd conn(::accept(listener.fd, nullptr, nullptr));
        if (!conn) {
            if (errno == EINTR || errno == ECONNABORTED)
                continue;
            throw_errno("accept");
        }
        return conn;
    }
}

Fd connect_with_retry(const sockaddr_in& addr, Clock::time_point deadline,
                      const std::string& label) {
    for (;;) {
        Fd fd(::socket(AF_INET, SOCK_STREAM, 0));
        if (!fd)
            throw_errno("socket");
        if (::connect(fd.fd, reinterpret_cast<const sockaddr*>(&addr), sizeof(addr)) == 0) {
            int one = 1;
            ::setsockopt(fd.fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
            return fd;
        }
        if (Clock::now() >= deadline)
            throw ConnectionError("cannot connect to " + label + ": " +
                                  std::strerror(errno));
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
}

// Blocking read of exactly n bytes. A deadline of time_point::max() means
// wait forever. EOF before the first byte reports `clean_eof`; EOF in the
// middle of the run is always a protocol error.
void read_exact(int fd, std::uint8_t* dst, std::size_t n, Clock::time_point deadline,
                bool* clean_eof = nullptr) {
    std::size_t got = 0;
    while (got < n) {
        if (deadline != Clock::time_point::max()) {
            pollfd pfd{fd, POLLIN, 0};
            const int rc = ::poll(&pfd, 1, remaining_ms(deadline));
            if (rc < 0) {
                if (errno == EINTR)
                    continue;
                throw_errno("poll");
            }
            if (rc == 0)
                throw ConnectionError("handshake timeout while reading");
        }
        const ssize_t r = ::recv(fd, dst + got, n - got, 0);
        if (r < 0) {
            if (errno == EINTR)
                continue;
            throw_errno("recv");
        }
        if (r == 0) {
            if (got == 0 && clean_eof != nullptr) {
                *clean_eof = true;
                return;
            }
            if (got == 0)
                throw ConnectionError("peer closed the connection");
            throw ProtocolError("connection closed mid-frame after " +
                                std::to_string(got) + " of " + std::to_string(n) +
                                " bytes");
        }
        got += static_cast<std::size_t>(r);
    }
    if (clean_eof != nullptr)
        *clean_eof = false;
}

void write_all(int fd, const std::uint8_t* src, std::size_t n) {
    std::size_t sent = 0;
    while (sent < n) {
        const ssize_t w = ::send(fd, src + sent, n - sent, MSG_NOSIGNAL);
        if (w < 0) {
            if (errno == EINTR)
                continue;
            throw_errno("send");
        }
        sent += static_cast<std::size_t>(w);
    }
}

void append_string(std::vector<std::uint8_t>& out, const std::string& s) {
    bytes::append_u32le(out, static_cast<std::uint32_t>(s.size()));
    out.insert(out.end(), s.begin(), s.end());
}

std::string read_string(int fd, Clock::time_point deadline) {
    std::uint8_t lenbuf[4];
    read_exact(fd, lenbuf, 4, deadline);
    const std::uint32_t len = bytes::get_u32le(lenbuf);
    if (len > 4096)
        throw ProtocolError("unreasonable address length " + std::to_string(len));
    std::string s(len, '\0');
    if (len > 0)
        read_exact(fd, reinterpret_cast<std::uint8_t*>(s.data()), len, deadline);
    return s;
}

// "LFTX" + version + rank; used both for coordinator registration (with a
// listen address appended) and for identifying direct peer connections.
void send_hello(int fd, int rank) {
    std::vector<std::uint8_t> msg(kMagic, kMagic + 4);
    bytes::append_u32le(msg, kProtocolVersion);
    bytes::append_u32le(msg, static_cast<std::uint32_t>(rank));
    write_all(fd, msg.data(), msg.size());
}

std::uint32_t read_hello(int fd, Clock::time_point deadline) {
    std::uint8_t head[12];
    read_exact(fd, head, sizeof(head), deadline);
    if (std::memcmp(head, kMagic, 4) != 0)
        throw ProtocolError("bad handshake magic");
    const std::uint32_t version = bytes::get_u32le(head + 4);
    if (version != kProtocolVersion)
        throw ProtocolError("unsupported protocol version " + std::to_string(version));
    return bytes::get_u32le(head + 8);
}

class TcpTransport final : public Transport {
  public:
    TcpTransport(const TcpConfig& cfg, std::vector<Fd> peers)
        : Transport(cfg.rank, cfg.nranks), peers_(std::move(peers)) {}

    ~TcpTransport() override { close(); }

    void close() override {
        if (closed_)
            return;
        closed_ = true;
        for (auto& fd : peers_) {
            if (fd)
                ::shutdown(fd.fd, SHUT_RDWR);
            fd.reset();
        }
    }

  protected:
    void do_send(int to, std::span<const std::uint8_t> payload) override {
        const int fd = peer_fd(to);
        std::uint8_t header[8];
        bytes::put_u64le(header, payload.size());
        write_all(fd, header, 8);
        if (!payload.empty())
            write_all(fd, payload.data(), payload.size());
    }

    std::vector<std::uint8_t> do_recv(int from) override {
        const std::uint64_t len = read_frame_length(from);
        std::vector<std::uint8_t> payload(len);
        if (len > 0)
            read_exact(peer_fd(from), payload.data(), len, Clock::time_point::max());
        return payload;
    }

    void do_recv_into(int from, std::span<std::uint8_t> dst) override {
        const std::uint64_t len = read_frame_length(from);
        if (len != dst.size())
            throw ProtocolError("frame from rank " + std::to_string(from) + " has " +
                                std::to_string(len) + " bytes, expected " +
                                std::to_string(dst.size()));
        if (len > 0)
            read_exact(peer_fd(from), dst.data(), len, Clock::time_point::max());
    }

  private:
    int peer_fd(int peer) const {
        const auto& fd = peers_[static_cast<std::size_t>(peer)];
        if (!fd)
            throw ConnectionError("no connection to rank " + std::to_string(peer));
        return fd.fd;
    }

    std::uint64_t read_frame_length(int from) {
        std::uint8_t header[8];
        bool eof = false;
        read_exact(peer_fd(from), header, 8, Clock::time_point::max(), &eof);
        if (eof)
            throw ConnectionError("rank " + std::to_string(from) +
                                  " closed the connection");
        return bytes::get_u64le(header);
    }

    std::vector<Fd> peers_;
    bool closed_ = false;
};

} // namespace

std::unique_ptr<Transport> tcp_open(const TcpConfig& cfg) {
    if (cfg.nranks < 1)
        throw ConfigError("nranks must be at least 1");
    if (cfg.rank < 0 || cfg.rank >= cfg.nranks)
        throw ConfigError("rank " + std::to_string(cfg.rank) + " out of range for " +
                          std::to_string(cfg.nranks) + " ranks");
    if (cfg.nranks == 1)
        return std::make_unique<TcpTransport>(cfg, std::vector<Fd>{});
    if (cfg.coordinator.empty())
        throw ConfigError("tcp backend requires a coordinator address");

    const auto deadline =
        Clock::now() + std::chrono::milliseconds(cfg.handshake_timeout_ms);

    std::uint16_t own_port = 0;
    Fd listener = open_listener("0.0.0.0", cfg.listen_port, &own_port);
    const std::string own_addr =
        cfg.advertise_host + ":" + std::to_string(own_port);

    std::vector<std::string> table(static_cast<std::size_t>(cfg.nranks));

    if (cfg.rank == 0) {
        const HostPort coord = parse_host_port(cfg.coordinator);
        Fd coord_listener = open_listener(coord.host, coord.port, nullptr);
        table[0] = own_addr;
        std::vector<Fd> registrations(static_cast<std::size_t>(cfg.nranks));
        for (int i = 1; i < cfg.nranks; ++i) {
            Fd conn = accept_with_deadline(coord_listener, deadline);
            const std::uint32_t peer_rank = read_hello(conn.fd, deadline);
            if (peer_rank == 0 || peer_rank >= static_cast<std::uint32_t>(cfg.nranks))
                throw ConfigError("registration from invalid rank " +
                                  std::to_string(peer_rank));
            if (!table[peer_rank].empty())
                throw ConfigError("rank collision: two workers registered as rank " +
                                  std::to_string(peer_rank));
            table[peer_rank] = read_string(conn.fd, deadline);
            registrations[peer_rank] = std::move(conn);
        }
        std::vector<std::uint8_t> reply;
        bytes::append_u32le(reply, static_cast<std::uint32_t>(cfg.nranks));
        for (const auto& addr : table)
            append_string(reply, addr);
        for (int i = 1; i < cfg.nranks; ++i)
            write_all(registrations[static_cast<std::size_t>(i)].fd, reply.data(),
                      reply.size());
    } else {
        const sockaddr_in coord_addr = resolve(parse_host_port(cfg.coordinator));
        Fd coord = connect_with_retry(coord_addr, deadline, cfg.coordinator);
        send_hello(coord.fd, cfg.rank);
        std::vector<std::uint8_t> addr_msg;
        append_string(addr_msg, own_addr);
        write_all(coord.fd, addr_msg.data(), addr_msg.size());

        std::uint8_t count_buf[4];
        read_exact(coord.fd, count_buf, 4, deadline);
        const std::uint32_t announced = bytes::get_u32le(count_buf);
        if (announced != static_cast<std::uint32_t>(cfg.nranks))
            throw ConfigError("coordinator announced " + std::to_string(announced) +
                              " ranks, expected " + std::to_string(cfg.nranks));
        for (int i = 0; i < cfg.nranks; ++i)
            table[static_cast<std::size_t>(i)] = read_string(coord.fd, deadline);
    }

    // direct mesh: connect to lower ranks, accept from higher ranks
    std::vector<Fd> peers(static_cast<std::size_t>(cfg.nranks));
    for (int peer = 0; peer < cfg.rank; ++peer) {
        const sockaddr_in addr =
            resolve(parse_host_port(table[static_cast<std::size_t>(peer)]));
        Fd conn = connect_with_retry(addr, deadline,
                                     table[static_cast<std::size_t>(peer)]);
        send_hello(conn.fd, cfg.rank);
        peers[static_cast<std::size_t>(peer)] = std::move(conn);
    }
    for (int expected = cfg.rank + 1; expected < cfg.nranks; ++expected) {
        Fd conn = accept_with_deadline(listener, deadline);
        const std::uint32_t peer_rank = read_hello(conn.fd, deadline);
        if (peer_rank <= static_cast<std::uint32_t>(cfg.rank) ||
            peer_rank >= static_cast<std::uint32_t>(cfg.nranks))
            throw ProtocolError("unexpected peer hello from rank " +
                                std::to_string(peer_rank));
        if (peers[peer_rank])
            throw ConfigError("rank collision: duplicate peer connection from rank " +
                              std::to_string(peer_rank));
        int one = 1;
        ::setsockopt(conn.fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
        peers[peer_rank] = std::move(conn);
    }

    return std::make_unique<TcpTransport>(cfg, std::move(peers));
}

} // namespace lft
