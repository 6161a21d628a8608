#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sbp {

// Raised on rendezvous timeouts, mismatched collectives, and wire protocol
// violations.
class CommError : public std::runtime_error {
  public:
    explicit CommError(const std::string& what) : std::runtime_error(what) {}
};

// Rank-addressed message fabric. All ranks must call collectives in the same
// order (congruent sequences); payloads are opaque bytes.
class Communicator {
  public:
    virtual ~Communicator() = default;
    virtual int rank() const = 0;
    virtual int size() const = 0;

    // Every rank contributes a payload and receives all payloads in rank
    // order (own payload included, bit-exact).
    virtual std::vector<std::string> allgather(std::string_view payload) = 0;

    // Point-to-point toward rank 0. Per-rank FIFO order is preserved.
    virtual void send_to_root(std::string_view payload) = 0;
    // Root-only: returns one payload from every non-root rank, indexed by
    // rank (slot 0 stays empty).
    virtual std::vector<std::string> receive_at_root() = 0;

    virtual void barrier() = 0;
};

// Logical ranks as threads in one process, synchronizing through shared
// in-memory rendezvous state. A rank stuck waiting longer than the timeout
// (e.g. mismatched collective ordering) fails with CommError.
class InProcessWorld {
  public:
    explicit InProcessWorld(int size,
                            std::chrono::milliseconds timeout = std::chrono::milliseconds(60000));
    ~InProcessWorld();
    int size() const;
    std::unique_ptr<Communicator> communicator(int rank);

    struct State;  // shared rendezvous state; opaque to callers

  private:
    std::shared_ptr<State> state_;
};

// Runs fn once per rank on its own thread against a shared InProcessWorld.
// The first exception from any rank is rethrown after all threads join.
void run_in_process(int ranks, const std::function<void(Communicator&)>& fn,
                    std::chrono::milliseconds timeout = std::chrono::milliseconds(60000));

// OS-process backend over local stream sockets. Rank 0 listens on
// socket_path; other ranks connect and identify themselves. Frames are an
// op byte plus a 64-bit little-endian length prefix; collectives are
// root-coordinated.
std::unique_ptr<Communicator> multiprocess_root(int ranks, const std::string& socket_path,
                                                std::chrono::milliseconds timeout = std::chrono::milliseconds(60000));
std::unique_ptr<Communicator> multiprocess_client(int rank, int ranks,
                                                  const std::string& socket_path,
                                                  std::chrono::milliseconds timeout = std::chrono::milliseconds(60000));

// Forks ranks−1 children and runs fn at every rank (rank 0 in the calling
// process). Returns once all children exit; a nonzero child raises.
void run_multi_process(int ranks, const std::string& socket_path,
                       const std::function<void(Communicator&)>& fn);

}  // namespace sbp
