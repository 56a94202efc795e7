#pragma once

#include <memory>
#include <string>

#include "lft/transport.hpp"

namespace lft {

namespace detail {
struct InprocState;
}

/// Shared hub for running all ranks of a job inside one process, one
/// worker thread per endpoint. Channels are per ordered pair, FIFO,
/// internally synchronized.
class InprocHub {
  public:
    explicit InprocHub(int nranks);

    /// Endpoint for `rank`. Each rank may be connected at most once while
    /// its endpoint is open.
    std::unique_ptr<Transport> connect(int rank);

    /// Fails every pending and future blocking call with ConnectionError.
    /// For unwinding worker threads after another worker threw.
    void poison(const std::string& reason);

  private:
    std::shared_ptr<detail::InprocState> state_;
};

} // namespace lft
