#pragma once

// Query drivers and a raw line client shared by the engine tests and the
// acceptance binary.

#include "support/helpers.hpp"
#include "support/oracles.hpp"

#include "bc/engine.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <future>
#include <optional>
#include <set>
#include <string>
#include <thread>

namespace th {

inline std::string query_for(int predicate) {
    const std::string p = "p" + std::to_string(predicate);
    return predicate % 2 == 0 ? p + "(?x)" : p + "(?x, ?y)";
}

/// Ground answers of `p<i>(..)` found by the engine, rendered as atoms.
inline std::set<std::string> engine_answers(const bc::Session &s, int predicate, const bc::EngineConfig &cfg) {
    const bc::Atom q = atom(query_for(predicate));
    const bc::QueryResult r = bc::run_query(s, q, cfg);
    std::set<std::string> out;
    for (const auto &sol : r.solutions) {
        std::string text = "p" + std::to_string(predicate) + "(" + sol.bindings.at("?x");
        if (predicate % 2 == 1) text += ", " + sol.bindings.at("?y");
        out.insert(text + ")");
    }
    return out;
}

inline std::set<std::string> closure_answers(const std::set<std::string> &closure, int predicate) {
    const std::string prefix = "p" + std::to_string(predicate) + "(";
    std::set<std::string> out;
    for (const auto &a : closure)
        if (a.rfind(prefix, 0) == 0) out.insert(a);
    return out;
}

inline bc::EngineConfig exhaustive_config(int workers = 1, std::uint64_t seed = 0) {
    bc::EngineConfig cfg;
    cfg.workers = workers;
    cfg.seed = seed;
    cfg.max_expansions = 20000;
    cfg.max_depth = 64;
    return cfg;
}

/// Everything the CLI would print for a query in text mode.
inline std::string render_all(const bc::QueryResult &r) {
    std::string out;
    for (const auto &s : r.solutions)
        for (const auto &p : s.proofs) out += bc::render_explanation(p, bc::ExplanationFormat::Text) + "\n";
    if (r.solutions.empty()) out = "No solutions.\n";
    return out;
}

/// Blocking newline-framed TCP client for poking at a worker by hand.
class LineClient {
  public:
    explicit LineClient(int port) {
        fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
        sockaddr_in addr{};
        addr.sin_family = AF_INET;
        addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
        addr.sin_port = htons(static_cast<std::uint16_t>(port));
        if (::connect(fd_, reinterpret_cast<sockaddr *>(&addr), sizeof addr) != 0) {
            ::close(fd_);
            fd_ = -1;
        }
    }
    ~LineClient() {
        if (fd_ >= 0) ::close(fd_);
    }
    LineClient(const LineClient &) = delete;
    LineClient &operator=(const LineClient &) = delete;

    bool connected() const { return fd_ >= 0; }

    bool send(const std::string &line) {
        const std::string framed = line + "\n";
        return ::send(fd_, framed.data(), framed.size(), MSG_NOSIGNAL) == static_cast<ssize_t>(framed.size());
    }

    /// Next line, or nullopt on close or after `timeout_ms`.
    std::optional<std::string> recv(int timeout_ms = 5000) {
        while (true) {
            const auto nl = buf_.find('\n');
            if (nl != std::string::npos) {
                std::string line = buf_.substr(0, nl);
                buf_.erase(0, nl + 1);
                return line;
            }
            pollfd p{fd_, POLLIN, 0};
            if (::poll(&p, 1, timeout_ms) <= 0) return std::nullopt;
            char chunk[4096];
            const ssize_t n = ::recv(fd_, chunk, sizeof chunk, 0);
            if (n <= 0) return std::nullopt;
            buf_.append(chunk, static_cast<std::size_t>(n));
        }
    }

  private:
    int fd_ = -1;
    std::string buf_;
};

/// serve_worker on a background thread bound to a free loopback port.
class WorkerThread {
  public:
    explicit WorkerThread(const bc::Session &s, int idle_timeout_ms = 0, std::string id = "remote") {
        std::promise<int> bound;
        auto port = bound.get_future();
        bc::ServeOptions o;
        o.idle_timeout_ms = idle_timeout_ms;
        o.worker_id = std::move(id);
        o.stop = &stop_;
        o.on_listening = [p = std::make_shared<std::promise<int>>(std::move(bound))](int n) { p->set_value(n); };
        result_ = std::async(std::launch::async, [&s, o] { return bc::serve_worker(s, o); });
        port_ = port.get();
    }
    ~WorkerThread() {
        stop_ = true;
        if (result_.valid()) result_.wait();
    }

    int port() const { return port_; }
    std::string endpoint() const { return "127.0.0.1:" + std::to_string(port_); }
    /// Waits for the server to return on its own; nullopt after `ms`.
    std::optional<std::size_t> join(int ms) {
        if (result_.wait_for(std::chrono::milliseconds(ms)) != std::future_status::ready) return std::nullopt;
        return result_.get();
    }

  private:
    std::atomic<bool> stop_{false};
    int port_ = 0;
    std::future<std::size_t> result_;
};

} // namespace th
