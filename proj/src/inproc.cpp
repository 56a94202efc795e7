#include "lft/inproc.hpp"

#include <condition_variable>
#include <cstring>
#include <deque>
#include <mutex>
#include <vector>

namespace lft {

namespace detail {

struct InprocState {
    explicit InprocState(int n)
        : nranks(n), channels(static_cast<std::size_t>(n) * static_cast<std::size_t>(n)),
          connected(static_cast<std::size_t>(n), false),
          closed(static_cast<std::size_t>(n), false) {}

    struct Channel {
        std::mutex mutex;
        std::condition_variable ready;
        std::deque<std::vector<std::uint8_t>> queue;
    };

    Channel& channel(int from, int to) {
        return channels[static_cast<std::size_t>(from) * static_cast<std::size_t>(nranks) +
                        static_cast<std::size_t>(to)];
    }

    int nranks;
    std::vector<Channel> channels;

    std::mutex admin_mutex;
    std::vector<bool> connected;
    std::vector<bool> closed;
    bool poisoned = false;
    std::string poison_reason;

    void poison(const std::string& reason) {
        {
            std::lock_guard<std::mutex> admin(admin_mutex);
            if (poisoned)
                return;
            poisoned = true;
            poison_reason = reason;
        }
        for (auto& ch : channels) {
            std::lock_guard<std::mutex> lock(ch.mutex);
            ch.ready.notify_all();
        }
    }

    void mark_closed(int rank) {
        {
            std::lock_guard<std::mutex> admin(admin_mutex);
            closed[static_cast<std::size_t>(rank)] = true;
            connected[static_cast<std::size_t>(rank)] = false;
        }
        // wake receivers blocked on messages from this rank
        for (int to = 0; to < nranks; ++to) {
            auto& ch = channel(rank, to);
            std::lock_guard<std::mutex> lock(ch.mutex);
            ch.ready.notify_all();
        }
    }

    bool is_poisoned() {
        std::lock_guard<std::mutex> admin(admin_mutex);
        return poisoned;
    }

    bool is_closed(int rank) {
        std::lock_guard<std::mutex> admin(admin_mutex);
        return closed[static_cast<std::size_t>(rank)];
    }
};

} // namespace detail

namespace {

class InprocTransport final : public Transport {
  public:
    InprocTransport(std::shared_ptr<detail::InprocState> state, int rank)
        : Transport(rank, state->nranks), state_(std::move(state)) {}

    ~InprocTransport() override { close(); }

    void close() override {
        if (closed_)
            return;
        closed_ = true;
        state_->mark_closed(rank());
    }

  protected:
    void do_send(int to, std::span<const std::uint8_t> payload) override {
        if (state_->is_poisoned())
            throw ConnectionError("hub poisoned: " + state_->poison_reason);
        if (state_->is_closed(to))
            throw ConnectionError("peer rank " + std::to_string(to) + " is closed");
        auto& ch = state_->channel(rank(), to);
        {
            std::lock_guard<std::mutex> lock(ch.mutex);
            ch.queue.emplace_back(payload.begin(), payload.end());
        }
        ch.ready.notify_one();
    }

    std::vector<std::uint8_t> do_recv(int from) override {
        std::vector<std::uint8_t> msg = wait_message(from);
        return msg;
    }

    void do_recv_into(int from, std::span<std::uint8_t> dst) override {
        std::vector<std::uint8_t> msg = wait_message(from);
        if (msg.size() != dst.size())
            throw ProtocolError("message from rank " + std::to_string(from) + " has " +
                                std::to_string(msg.size()) + " bytes, expected " +
                                std::to_string(dst.size()));
        if (!msg.empty())
            std::memcpy(dst.data(), msg.data(), msg.size());
    }

  private:
    std::vector<std::uint8_t> wait_message(int from) {
        auto& ch = state_->channel(from, rank());
        std::unique_lock<std::mutex> lock(ch.mutex);
        ch.ready.wait(lock, [&] {
            return !ch.queue.empty() || state_->is_poisoned() || state_->is_closed(from);
        });
        if (!ch.queue.empty()) {
            std::vector<std::uint8_t> msg = std::move(ch.queue.front());
            ch.queue.pop_front();
            return msg;
        }
        if (state_->is_poisoned())
            throw ConnectionError("hub poisoned: " + state_->poison_reason);
        throw ConnectionError("peer rank " + std::to_string(from) +
                              " closed with no pending message");
    }

    std::shared_ptr<detail::InprocState> state_;
    bool closed_ = false;
};

} // namespace

InprocHub::InprocHub(int nranks) {
    if (nranks < 1)
        throw ConfigError("nranks must be at least 1");
    state_ = std::make_shared<detail::InprocState>(nranks);
}

std::unique_ptr<Transport> InprocHub::connect(int rank) {
    if (rank < 0 || rank >= state_->nranks)
        throw ConfigError("rank " + std::to_string(rank) + " out of range for " +
                          std::to_string(state_->nranks) + " ranks");
    {
        std::lock_guard<std::mutex> admin(state_->admin_mutex);
        if (state_->connected[static_cast<std::size_t>(rank)])
            throw ConfigError("rank " + std::to_string(rank) + " already connected");
        state_->connected[static_cast<std::size_t>(rank)] = true;
        state_->closed[static_cast<std::size_t>(rank)] = false;
    }
    return std::make_unique<InprocTransport>(state_, rank);
}

void InprocHub::poison(const std::string& reason) {
    state_->poison(reason);
}

} // namespace lft
