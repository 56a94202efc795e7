#include "lft/transport.hpp"

#include <algorithm>
#include <string>

#include "lft/bytes.hpp"

namespace lft {

namespace {

struct Gauge {
    Gauge(int& active, int& watermark) : active_(active) {
        ++active_;
        watermark = std::max(watermark, active_);
    }
    ~Gauge() { --active_; }
    int& active_;
};

} // namespace

Transport::Transport(int rank, int nranks) : rank_(rank), nranks_(nranks) {
    if (nranks < 1)
        throw ConfigError("nranks must be at least 1");
    if (rank < 0 || rank >= nranks)
        throw ConfigError("rank " + std::to_string(rank) + " out of range for " +
                          std::to_string(nranks) + " ranks");
}

void Transport::check_peer(int peer) const {
    if (peer < 0 || peer >= nranks_)
        throw ConfigError("peer rank " + std::to_string(peer) + " out of range for " +
                          std::to_string(nranks_) + " ranks");
    if (peer == rank_)
        throw ConfigError("rank " + std::to_string(rank_) + " cannot message itself");
}

void Transport::send(int to, std::span<const std::uint8_t> payload) {
    check_peer(to);
    Gauge gauge(active_sends_, stats_.max_concurrent_sends);
    do_send(to, payload);
    ++stats_.messages_sent;
    stats_.bytes_sent += payload.size();
}

std::vector<std::uint8_t> Transport::recv(int from) {
    check_peer(from);
    Gauge gauge(active_recvs_, stats_.max_concurrent_recvs);
    std::vector<std::uint8_t> payload = do_recv(from);
    ++stats_.messages_received;
    ++stats_.recv_allocated;
    stats_.bytes_received += payload.size();
    return payload;
}

void Transport::recv_into(int from, std::span<std::uint8_t> dst) {
    check_peer(from);
    Gauge gauge(active_recvs_, stats_.max_concurrent_recvs);
    do_recv_into(from, dst);
    ++stats_.messages_received;
    ++stats_.recv_in_place;
    stats_.bytes_received += dst.size();
}

void Transport::barrier() {
    const std::uint64_t generation = barrier_generation_++;
    if (nranks_ == 1)
        return;
    std::vector<std::uint8_t> token;
    bytes::append_u64le(token, generation);
    if (rank_ == 0) {
        for (int peer = 1; peer < nranks_; ++peer) {
            std::uint8_t incoming[8];
            recv_into(peer, incoming);
            if (bytes::get_u64le(incoming) != generation)
                throw ProtocolError("barrier generation mismatch with rank " +
                                    std::to_string(peer));
        }
        for (int peer = 1; peer < nranks_; ++peer)
            send(peer, token);
    } else {
        send(0, token);
        std::uint8_t incoming[8];
        recv_into(0, incoming);
        if (bytes::get_u64le(incoming) != generation)
            throw ProtocolError("barrier generation mismatch with rank 0");
    }
}

ExchangePlan make_plan(int rank, std::span<const int> overlapping_peers) {
    ExchangePlan plan;
    plan.steps.reserve(overlapping_peers.size());
    for (int peer : overlapping_peers) {
        if (peer == rank)
            throw ConfigError("exchange plan cannot include own rank");
        plan.steps.push_back(ExchangeStep{peer, rank < peer});
    }
    std::sort(plan.steps.begin(), plan.steps.end(),
              [](const ExchangeStep& a, const ExchangeStep& b) { return a.peer < b.peer; });
    return plan;
}

double reduce_max(Transport& transport, double local) {
    if (transport.nranks() == 1)
        return local;
    std::vector<std::uint8_t> msg(8);
    if (transport.rank() == 0) {
        double best = local;
        for (int peer = 1; peer < transport.nranks(); ++peer) {
            std::uint8_t incoming[8];
            transport.recv_into(peer, incoming);
            best = std::max(best, bytes::get_f64le(incoming));
        }
        bytes::put_f64le(msg.data(), best);
        for (int peer = 1; peer < transport.nranks(); ++peer)
            transport.send(peer, msg);
        return best;
    }
    bytes::put_f64le(msg.data(), local);
    transport.send(0, msg);
    std::uint8_t incoming[8];
    transport.recv_into(0, incoming);
    return bytes::get_f64le(incoming);
}

} // namespace lft
