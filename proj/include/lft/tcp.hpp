#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "lft/transport.hpp"

namespace lft {

/// TCP mesh configuration. Rank 0 runs the coordinator on the
/// `coordinator` address; every rank (including 0) connects to it,
/// registers its own listen address, receives the full peer table, then
/// forms direct peer connections.
struct TcpConfig {
    int rank = 0;
    int nranks = 1;
    std::string coordinator;          // "host:port"
    std::uint16_t listen_port = 0;    // 0 picks an ephemeral port
    std::string advertise_host = "127.0.0.1";
    int handshake_timeout_ms = 30000;
};

/// Opens the full mesh. Blocks until every peer connection is
/// established or the handshake timeout expires.
std::unique_ptr<Transport> tcp_open(const TcpConfig& config);

} // namespace lft
