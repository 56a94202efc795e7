#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "lft/errors.hpp"

namespace lft {

/// Per-endpoint message accounting, used by tests to check the
/// communication policy: message economy, receive-in-place, and the
/// one-send/one-receive-at-a-time property.
struct TransportStats {
    std::uint64_t messages_sent = 0;
    std::uint64_t messages_received = 0;
    std::uint64_t bytes_sent = 0;
    std::uint64_t bytes_received = 0;
    std::uint64_t recv_in_place = 0;   // receives landing in caller storage
    std::uint64_t recv_allocated = 0;  // receives into a fresh buffer
    int max_concurrent_sends = 0;
    int max_concurrent_recvs = 0;
};

/// Reliable, ordered point-to-point byte messaging between ranks.
/// Messages between a fixed (sender, receiver) pair arrive exactly once,
/// uncorrupted, in send order. send/recv block. One endpoint is owned by
/// exactly one worker; endpoints of different ranks may be used
/// concurrently.
class Transport {
  public:
    virtual ~Transport() = default;

    int rank() const { return rank_; }
    int nranks() const { return nranks_; }

    void send(int to, std::span<const std::uint8_t> payload);

    /// Oldest undelivered message from `from`.
    std::vector<std::uint8_t> recv(int from);

    /// Receives one message directly into `dst`. The message must be
    /// exactly dst.size() bytes; anything else is a ProtocolError.
    void recv_into(int from, std::span<std::uint8_t> dst);

    /// All ranks reach the barrier before any proceeds. Gather-to-0 plus
    /// broadcast of a generation token.
    void barrier();

    /// Idempotent. Pending undelivered messages are not flushed.
    virtual void close() = 0;

    const TransportStats& stats() const { return stats_; }
    void reset_stats() { stats_ = TransportStats{}; }

  protected:
    Transport(int rank, int nranks);

    virtual void do_send(int to, std::span<const std::uint8_t> payload) = 0;
    virtual std::vector<std::uint8_t> do_recv(int from) = 0;
    virtual void do_recv_into(int from, std::span<std::uint8_t> dst) = 0;

  private:
    void check_peer(int peer) const;

    int rank_;
    int nranks_;
    TransportStats stats_;
    int active_sends_ = 0;
    int active_recvs_ = 0;
    std::uint64_t barrier_generation_ = 0;
};

struct ExchangeStep {
    int peer;
    bool send_first;  // exactly one side of each pair sends first
};

/// Ordered pairwise exchange schedule: peers ascending, the lower rank of
/// each pair sends first. Executing all ranks' plans concurrently with
/// blocking send/recv cannot deadlock: roles within a pair are
/// complementary and steps of different pairs are independent.
struct ExchangePlan {
    std::vector<ExchangeStep> steps;
};

ExchangePlan make_plan(int rank, std::span<const int> overlapping_peers);

/// Maximum of `local` over all ranks, identical on every rank.
double reduce_max(Transport& transport, double local);

} // namespace lft
