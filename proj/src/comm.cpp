#include "sbp/comm.hpp"

#include <poll.h>
#include <sys/socket.h>
#include <sys/un.h>
#include <sys/wait.h>
#include <unistd.h>

#include <condition_variable>
#include <cstring>
#include <deque>
#include <map>
#include <mutex>
#include <thread>

namespace sbp {

namespace {

enum CollectiveKind : int { kAllgather = 1, kSend = 2, kBarrier = 3 };

const char* kind_name(int kind) {
    switch (kind) {
        case kAllgather: return "allgather";
        case kSend: return "send_to_root";
        case kBarrier: return "barrier";
    }
    return "unknown";
}

}  // namespace

// ---------------------------------------------------------------------------
// In-process backend: ranks are threads sharing one rendezvous structure.

struct InProcessWorld::State {
    int size;
    std::chrono::milliseconds timeout;
    std::mutex mutex;
    std::condition_variable cv;
    bool failed = false;
    std::string failure;

    struct Round {
        int kind = 0;
        int arrivals = 0;
        int pickups = 0;
        bool done = false;
        std::vector<std::string> payloads;
    };
    // Keyed by each rank's collective sequence number; congruent programs
    // meet in the same round.
    std::map<std::uint64_t, Round> rounds;
    std::vector<std::deque<std::string>> mailboxes;

    void fail(const std::string& why) {
        failed = true;
        if (failure.empty()) failure = why;
        cv.notify_all();
    }

    std::vector<std::string> collective(int rank, std::uint64_t seq, int kind,
                                        std::string_view payload) {
        std::unique_lock<std::mutex> lock(mutex);
        if (failed) throw CommError(failure);
        Round& round = rounds[seq];
        if (round.arrivals > 0 && round.kind != kind) {
            const std::string why = std::string("mismatched collective ordering: rank ") +
                                    std::to_string(rank) + " called " + kind_name(kind) +
                                    " while round " + std::to_string(seq) + " is " +
                                    kind_name(round.kind);
            fail(why);
            throw CommError(why);
        }
        if (round.arrivals == 0) {
            round.kind = kind;
            round.payloads.resize(static_cast<size_t>(size));
        }
        round.payloads[static_cast<size_t>(rank)] = std::string(payload);
        ++round.arrivals;
        if (round.arrivals == size) {
            round.done = true;
            cv.notify_all();
        } else {
            const bool ok = cv.wait_for(lock, timeout, [&] { return round.done || failed; });
            if (failed) throw CommError(failure);
            if (!ok) {
                const std::string why = std::string("collective timeout in ") + kind_name(kind) +
                                        " at rank " + std::to_string(rank) +
                                        " (stuck or mismatched peer)";
                fail(why);
                throw CommError(why);
            }
        }
        std::vector<std::string> results = round.payloads;
        ++round.pickups;
        if (round.pickups == size) rounds.erase(seq);
        return results;
    }
};

namespace {

class InProcessComm : public Communicator {
  public:
    InProcessComm(std::shared_ptr<InProcessWorld::State> state, int rank)
        : state_(std::move(state)), rank_(rank) {}

    int rank() const override { return rank_; }
    int size() const override { return state_->size; }

    std::vector<std::string> allgather(std::string_view payload) override {
        return state_->collective(rank_, seq_++, kAllgather, payload);
    }

    void send_to_root(std::string_view payload) override {
        if (rank_ == 0) throw CommError("send_to_root called at root");
        std::lock_guard<std::mutex> lock(state_->mutex);
        if (state_->failed) throw CommError(state_->failure);
        state_->mailboxes[static_cast<size_t>(rank_)].push_back(std::string(payload));
        state_->cv.notify_all();
    }

    std::vector<std::string> receive_at_root() override {
        if (rank_ != 0) throw CommError("receive_at_root called away from root");
        std::vector<std::string> out(static_cast<size_t>(state_->size));
        std::unique_lock<std::mutex> lock(state_->mutex);
        for (int r = 1; r < state_->size; ++r) {
            auto& box = state_->mailboxes[static_cast<size_t>(r)];
            const bool ok = state_->cv.wait_for(lock, state_->timeout,
                                                [&] { return !box.empty() || state_->failed; });
            if (state_->failed) throw CommError(state_->failure);
            if (!ok)
                throw CommError("receive_at_root timeout waiting for rank " + std::to_string(r));
            out[static_cast<size_t>(r)] = std::move(box.front());
            box.pop_front();
        }
        return out;
    }

    void barrier() override { state_->collective(rank_, seq_++, kBarrier, {}); }

  private:
    std::shared_ptr<InProcessWorld::State> state_;
    int rank_;
    std::uint64_t seq_ = 0;
};

}  // namespace

InProcessWorld::InProcessWorld(int size, std::chrono::milliseconds timeout) {
    if (size < 1) throw std::invalid_argument("InProcessWorld: size must be positive");
    state_ = std::make_shared<State>();
    state_->size = size;
    state_->timeout = timeout;
    state_->mailboxes.resize(static_cast<size_t>(size));
}

InProcessWorld::~InProcessWorld() = default;

int InProcessWorld::size() const { return state_->size; }

std::unique_ptr<Communicator> InProcessWorld::communicator(int rank) {
    if (rank < 0 || rank >= state_->size) throw std::invalid_argument("communicator: bad rank");
    return std::make_unique<InProcessComm>(state_, rank);
}

void run_in_process(int ranks, const std::function<void(Communicator&)>& fn,
                    std::chrono::milliseconds timeout) {
    InProcessWorld world(ranks, timeout);
    std::vector<std::thread> threads;
    std::vector<std::exception_ptr> errors(static_cast<size_t>(ranks));
    threads.reserve(static_cast<size_t>(ranks));
    for (int r = 0; r < ranks; ++r) {
        threads.emplace_back([&world, &fn, &errors, r] {
            try {
                auto comm = world.communicator(r);
                fn(*comm);
            } catch (...) {
                errors[static_cast<size_t>(r)] = std::current_exception();
            }
        });
    }
    for (auto& t : threads) t.join();
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
}

// ---------------------------------------------------------------------------
// Multi-process backend: local stream sockets, root-coordinated collectives.
// Frames are [op byte][u64 little-endian length][payload].

namespace {

void write_u64(std::string& out, std::uint64_t value) {
    for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((value >> (8 * b)) & 0xff));
}

std::uint64_t read_u64(const unsigned char* bytes) {
    std::uint64_t value = 0;
    for (int b = 0; b < 8; ++b) value |= static_cast<std::uint64_t>(bytes[b]) << (8 * b);
    return value;
}

using Deadline = std::chrono::steady_clock::time_point;

void wait_fd(int fd, short events, Deadline deadline) {
    const auto now = std::chrono::steady_clock::now();
    if (now >= deadline) throw CommError("socket timeout");
    struct pollfd pfd = {fd, events, 0};
    const auto remaining =
        std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now).count();
    const int rc = ::poll(&pfd, 1, static_cast<int>(remaining));
    if (rc == 0) throw CommError("socket timeout");
    if (rc < 0) throw CommError(std::string("poll failed: ") + std::strerror(errno));
}

void write_all(int fd, const void* data, size_t len, Deadline deadline) {
    const char* p = static_cast<const char*>(data);
    while (len > 0) {
        const ssize_t n = ::send(fd, p, len, MSG_NOSIGNAL | MSG_DONTWAIT);
        if (n > 0) {
            p += n;
            len -= static_cast<size_t>(n);
            continue;
        }
        if (n < 0 && (errno == EAGAIN || errno == EWOULDBLOCK)) {
            wait_fd(fd, POLLOUT, deadline);
            continue;
        }
        throw CommError(std::string("socket write failed: ") + std::strerror(errno));
    }
}

void read_all(int fd, void* data, size_t len, Deadline deadline) {
    char* p = static_cast<char*>(data);
    while (len > 0) {
        const ssize_t n = ::recv(fd, p, len, MSG_DONTWAIT);
        if (n > 0) {
            p += n;
            len -= static_cast<size_t>(n);
            continue;
        }
        if (n == 0) throw CommError("socket closed by peer");
        if (errno == EAGAIN || errno == EWOULDBLOCK) {
            wait_fd(fd, POLLIN, deadline);
            continue;
        }
        throw CommError(std::string("socket read failed: ") + std::strerror(errno));
    }
}

void send_frame(int fd, unsigned char op, std::string_view payload, Deadline deadline) {
    std::string header;
    header.push_back(static_cast<char>(op));
    write_u64(header, payload.size());
    write_all(fd, header.data(), header.size(), deadline);
    if (!payload.empty()) write_all(fd, payload.data(), payload.size(), deadline);
}

std::pair<unsigned char, std::string> read_frame(int fd, Deadline deadline) {
    unsigned char header[9];
    read_all(fd, header, sizeof(header), deadline);
    const std::uint64_t len = read_u64(header + 1);
    if (len > (1ULL << 32)) throw CommError("frame length implausible");
    std::string payload(len, '\0');
    if (len > 0) read_all(fd, payload.data(), len, deadline);
    return {header[0], std::move(payload)};
}

class FdGuard {
  public:
    explicit FdGuard(int fd = -1) : fd_(fd) {}
    ~FdGuard() { reset(); }
    FdGuard(FdGuard&& other) noexcept : fd_(other.release()) {}
    FdGuard& operator=(FdGuard&& other) noexcept {
        reset();
        fd_ = other.release();
        return *this;
    }
    FdGuard(const FdGuard&) = delete;
    FdGuard& operator=(const FdGuard&) = delete;
    int get() const { return fd_; }
    int release() {
        int fd = fd_;
        fd_ = -1;
        return fd;
    }
    void reset() {
        if (fd_ >= 0) ::close(fd_);
        fd_ = -1;
    }

  private:
    int fd_;
};

int listen_unix(const std::string& path) {
    ::unlink(path.c_str());
    FdGuard fd(::socket(AF_UNIX, SOCK_STREAM, 0));
    if (fd.get() < 0) throw CommError(std::string("socket failed: ") + std::strerror(errno));
    struct sockaddr_un addr = {};
    addr.sun_family = AF_UNIX;
    if (path.size() >= sizeof(addr.sun_path)) throw CommError("socket path too long");
    std::strncpy(addr.sun_path, path.c_str(), sizeof(addr.sun_path) - 1);
    if (::bind(fd.get(), reinterpret_cast<struct sockaddr*>(&addr), sizeof(addr)) != 0)
        throw CommError(std::string("bind failed: ") + std::strerror(errno));
    if (::listen(fd.get(), 64) != 0)
        throw CommError(std::string("listen failed: ") + std::strerror(errno));
    return fd.release();
}

class RootComm : public Communicator {
  public:
    RootComm(int listen_fd, int ranks, std::chrono::milliseconds timeout)
        : ranks_(ranks), timeout_(timeout), client_fds_(static_cast<size_t>(ranks), -1) {
        FdGuard listener(listen_fd);
        const Deadline deadline = std::chrono::steady_clock::now() + timeout_;
        for (int i = 1; i < ranks_; ++i) {
            wait_fd(listener.get(), POLLIN, deadline);
            FdGuard client(::accept(listener.get(), nullptr, nullptr));
            if (client.get() < 0)
                throw CommError(std::string("accept failed: ") + std::strerror(errno));
            unsigned char id_bytes[8];
            read_all(client.get(), id_bytes, sizeof(id_bytes), deadline);
            const std::uint64_t rank = read_u64(id_bytes);
            if (rank == 0 || rank >= static_cast<std::uint64_t>(ranks_) ||
                client_fds_[static_cast<size_t>(rank)] >= 0)
                throw CommError("client announced an invalid rank");
            client_fds_[static_cast<size_t>(rank)] = client.release();
        }
    }

    ~RootComm() override {
        for (int fd : client_fds_)
            if (fd >= 0) ::close(fd);
    }

    int rank() const override { return 0; }
    int size() const override { return ranks_; }

    std::vector<std::string> allgather(std::string_view payload) override {
        const Deadline deadline = std::chrono::steady_clock::now() + timeout_;
        std::vector<std::string> parts(static_cast<size_t>(ranks_));
        parts[0] = std::string(payload);
        for (int r = 1; r < ranks_; ++r) {
            auto [op, body] = read_frame(client_fds_[static_cast<size_t>(r)], deadline);
            if (op != kAllgather)
                throw CommError("protocol error: rank " + std::to_string(r) + " sent " +
                                kind_name(op) + " during allgather");
            parts[static_cast<size_t>(r)] = std::move(body);
        }
        std::string reply;
        write_u64(reply, static_cast<std::uint64_t>(ranks_));
        for (const auto& part : parts) {
            write_u64(reply, part.size());
            reply += part;
        }
        for (int r = 1; r < ranks_; ++r)
            send_frame(client_fds_[static_cast<size_t>(r)], kAllgather, reply, deadline);
        return parts;
    }

    void send_to_root(std::string_view) override { throw CommError("send_to_root called at root"); }

    std::vector<std::string> receive_at_root() override {
        const Deadline deadline = std::chrono::steady_clock::now() + timeout_;
        std::vector<std::string> out(static_cast<size_t>(ranks_));
        for (int r = 1; r < ranks_; ++r) {
            auto [op, body] = read_frame(client_fds_[static_cast<size_t>(r)], deadline);
            if (op != kSend)
                throw CommError("protocol error: rank " + std::to_string(r) + " sent " +
                                kind_name(op) + " during receive_at_root");
            out[static_cast<size_t>(r)] = std::move(body);
        }
        return out;
    }

    void barrier() override {
        const Deadline deadline = std::chrono::steady_clock::now() + timeout_;
        for (int r = 1; r < ranks_; ++r) {
            auto [op, body] = read_frame(client_fds_[static_cast<size_t>(r)], deadline);
            if (op != kBarrier)
                throw CommError("protocol error: rank " + std::to_string(r) + " sent " +
                                kind_name(op) + " during barrier");
        }
        for (int r = 1; r < ranks_; ++r)
            send_frame(client_fds_[static_cast<size_t>(r)], kBarrier, {}, deadline);
    }

  private:
    int ranks_;
    std::chrono::milliseconds timeout_;
    std::vector<int> client_fds_;
};

class ClientComm : public Communicator {
  public:
    ClientComm(int rank, int ranks, const std::string& path, std::chrono::milliseconds timeout)
        : rank_(rank), ranks_(ranks), timeout_(timeout) {
        const Deadline deadline = std::chrono::steady_clock::now() + timeout_;
        while (true) {
            FdGuard fd(::socket(AF_UNIX, SOCK_STREAM, 0));
            if (fd.get() < 0) throw CommError(std::string("socket failed: ") + std::strerror(errno));
            struct sockaddr_un addr = {};
            addr.sun_family = AF_UNIX;
            if (path.size() >= sizeof(addr.sun_path)) throw CommError("socket path too long");
            std::strncpy(addr.sun_path, path.c_str(), sizeof(addr.sun_path) - 1);
            if (::connect(fd.get(), reinterpret_cast<struct sockaddr*>(&addr), sizeof(addr)) == 0) {
                fd_ = fd.release();
                break;
            }
            if (std::chrono::steady_clock::now() >= deadline)
                throw CommError("connect timeout to " + path);
            std::this_thread::sleep_for(std::chrono::milliseconds(5));
        }
        std::string hello;
        write_u64(hello, static_cast<std::uint64_t>(rank_));
        write_all(fd_, hello.data(), hello.size(), std::chrono::steady_clock::now() + timeout_);
    }

    ~ClientComm() override {
        if (fd_ >= 0) ::close(fd_);
    }

    int rank() const override { return rank_; }
    int size() const override { return ranks_; }

    std::vector<std::string> allgather(std::string_view payload) override {
        const Deadline deadline = std::chrono::steady_clock::now() + timeout_;
        send_frame(fd_, kAllgather, payload, deadline);
        auto [op, body] = read_frame(fd_, deadline);
        if (op != kAllgather) throw CommError("protocol error: unexpected reply to allgather");
        if (body.size() < 8) throw CommError("protocol error: short allgather reply");
        const unsigned char* p = reinterpret_cast<const unsigned char*>(body.data());
        const std::uint64_t count = read_u64(p);
        if (count != static_cast<std::uint64_t>(ranks_))
            throw CommError("protocol error: allgather count mismatch");
        size_t offset = 8;
        std::vector<std::string> parts(static_cast<size_t>(ranks_));
        for (std::uint64_t r = 0; r < count; ++r) {
            if (offset + 8 > body.size()) throw CommError("protocol error: truncated allgather reply");
            const std::uint64_t len = read_u64(p + offset);
            offset += 8;
            if (offset + len > body.size()) throw CommError("protocol error: truncated allgather reply");
            parts[static_cast<size_t>(r)] = body.substr(offset, len);
            offset += len;
        }
        return parts;
    }

    void send_to_root(std::string_view payload) override {
        send_frame(fd_, kSend, payload, std::chrono::steady_clock::now() + timeout_);
    }

    std::vector<std::string> receive_at_root() override {
        throw CommError("receive_at_root called away from root");
    }

    void barrier() override {
        const Deadline deadline = std::chrono::steady_clock::now() + timeout_;
        send_frame(fd_, kBarrier, {}, deadline);
        auto [op, body] = read_frame(fd_, deadline);
        if (op != kBarrier) throw CommError("protocol error: unexpected reply to barrier");
    }

  private:
    int rank_;
    int ranks_;
    std::chrono::milliseconds timeout_;
    int fd_ = -1;
};

}  // namespace

std::unique_ptr<Communicator> multiprocess_root(int ranks, const std::string& socket_path,
                                                std::chrono::milliseconds timeout) {
    if (ranks < 1) throw std::invalid_argument("multiprocess_root: ranks must be positive");
    return std::make_unique<RootComm>(listen_unix(socket_path), ranks, timeout);
}

std::unique_ptr<Communicator> multiprocess_client(int rank, int ranks,
                                                  const std::string& socket_path,
                                                  std::chrono::milliseconds timeout) {
    if (rank < 1 || rank >= ranks) throw std::invalid_argument("multiprocess_client: bad rank");
    return std::make_unique<ClientComm>(rank, ranks, socket_path, timeout);
}

void run_multi_process(int ranks, const std::string& socket_path,
                       const std::function<void(Communicator&)>& fn) {
    if (ranks < 1) throw std::invalid_argument("run_multi_process: ranks must be positive");
    const std::chrono::milliseconds timeout(120000);
    if (ranks == 1) {
        // Degenerate world: no sockets needed.
        InProcessWorld world(1, timeout);
        auto comm = world.communicator(0);
        fn(*comm);
        return;
    }
    FdGuard listener(listen_unix(socket_path));  // listening before fork: no connect race
    std::vector<pid_t> children;
    for (int r = 1; r < ranks; ++r) {
        const pid_t pid = ::fork();
        if (pid < 0) throw CommError(std::string("fork failed: ") + std::strerror(errno));
        if (pid == 0) {
            listener.reset();
            int status = 0;
            try {
                auto comm = multiprocess_client(r, ranks, socket_path, timeout);
                fn(*comm);
            } catch (const std::exception& e) {
                std::fprintf(stderr, "rank %d: %s\n", r, e.what());
                status = 1;
            }
            ::_exit(status);
        }
        children.push_back(pid);
    }
    std::string failure;
    try {
        RootComm root(listener.release(), ranks, timeout);
        fn(root);
    } catch (const std::exception& e) {
        failure = e.what();
    }
    bool child_failed = false;
    for (const pid_t pid : children) {
        int status = 0;
        ::waitpid(pid, &status, 0);
        if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) child_failed = true;
    }
    ::unlink(socket_path.c_str());
    if (!failure.empty()) throw CommError(failure);
    if (child_failed) throw CommError("a child rank exited with failure");
}

}  // namespace sbp
