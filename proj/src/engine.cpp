#include "bc/engine.hpp"

#include "bc/text.hpp"
#include "bc/wire.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <condition_variable>
#include <deque>
#include <mutex>
#include <optional>
#include <random>
#include <thread>

namespace bc {

std::string Session::hash() const {
    std::string data = kb.content_hash();
    data += "\n" + serialize(templates);
    data += "\n" + serialize(taxonomy);
    data += "\n" + (similarity ? serialize(*similarity) : std::string("-"));
    data += "\n" + serialize_rules(canned);
    data += "\n" + format_real(unifier.min_score) + " " + format_real(unifier.context_boost) + " " +
            std::to_string(unifier.max_results);
    return fnv1a_hex(data);
}

ProverContext Session::context() const {
    ProverContext ctx;
    ctx.kb = &kb;
    ctx.similarity = similarity;
    ctx.unifier_config = unifier;
    if (!templates.empty()) ctx.generators.push_back(std::make_shared<TemplateGenerator>(templates, taxonomy));
    if (!canned.empty()) ctx.generators.push_back(std::make_shared<CannedGenerator>(canned));
    return ctx;
}

std::string format_trace_line(const TraceRecord &r) {
    return "expand\t" + std::to_string(r.seq) + "\t" + r.worker + "\t" + format_real(r.priority.value) + "\t" +
           format_real(r.priority.c) + "\t" + std::to_string(r.priority.d) + "\t" + std::to_string(r.priority.x) +
           "\t" + format_real(r.priority.p) + "\t" + r.key;
}

namespace {

// ---------------------------------------------------------------------------
// Plumbing

template <class T>
class Channel {
  public:
    void push(T v) {
        {
            std::lock_guard lock(mu_);
            items_.push_back(std::move(v));
        }
        cv_.notify_one();
    }
    T pop() {
        std::unique_lock lock(mu_);
        cv_.wait(lock, [&] { return !items_.empty(); });
        T v = std::move(items_.front());
        items_.pop_front();
        return v;
    }

  private:
    std::mutex mu_;
    std::condition_variable cv_;
    std::deque<T> items_;
};

class Socket {
  public:
    explicit Socket(int fd = -1) : fd_(fd) {}
    Socket(const Socket &) = delete;
    Socket &operator=(const Socket &) = delete;
    Socket(Socket &&o) noexcept : fd_(std::exchange(o.fd_, -1)), buf_(std::move(o.buf_)) {}
    Socket &operator=(Socket &&o) noexcept {
        if (this != &o) {
            close();
            fd_ = std::exchange(o.fd_, -1);
            buf_ = std::move(o.buf_);
        }
        return *this;
    }
    ~Socket() { close(); }

    int fd() const { return fd_; }
    bool valid() const { return fd_ >= 0; }
    void close() {
        if (fd_ >= 0) ::close(fd_);
        fd_ = -1;
    }

    bool write_line(const std::string &line) {
        std::string data = line + "\n";
        std::size_t off = 0;
        while (off < data.size()) {
            const ssize_t n = ::send(fd_, data.data() + off, data.size() - off, MSG_NOSIGNAL);
            if (n <= 0) return false;
            off += static_cast<std::size_t>(n);
        }
        return true;
    }

    enum class Read { Line, Closed, Timeout };

    /// timeout_ms <= 0 waits forever.
    Read read_line(std::string &out, int timeout_ms = 0) {
        while (true) {
            if (auto nl = buf_.find('\n'); nl != std::string::npos) {
                out = buf_.substr(0, nl);
                buf_.erase(0, nl + 1);
                return Read::Line;
            }
            pollfd p{fd_, POLLIN, 0};
            const int r = ::poll(&p, 1, timeout_ms > 0 ? timeout_ms : -1);
            if (r == 0) return Read::Timeout;
            if (r < 0) return Read::Closed;
            char chunk[4096];
            const ssize_t n = ::recv(fd_, chunk, sizeof chunk, 0);
            if (n <= 0) return Read::Closed;
            buf_.append(chunk, static_cast<std::size_t>(n));
        }
    }

  private:
    int fd_;
    std::string buf_;
};

Socket connect_to(const std::string &endpoint) {
    const auto colon = endpoint.rfind(':');
    if (colon == std::string::npos) throw EngineError("worker address must be host:port: " + endpoint);
    const std::string host = endpoint.substr(0, colon);
    const std::string port = endpoint.substr(colon + 1);
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo *res = nullptr;
    if (::getaddrinfo(host.c_str(), port.c_str(), &hints, &res) != 0 || !res)
        throw EngineError("cannot resolve worker " + endpoint);
    Socket s;
    for (addrinfo *a = res; a; a = a->ai_next) {
        const int fd = ::socket(a->ai_family, a->ai_socktype, a->ai_protocol);
        if (fd < 0) continue;
        if (::connect(fd, a->ai_addr, a->ai_addrlen) == 0) {
            s = Socket(fd);
            break;
        }
        ::close(fd);
    }
    ::freeaddrinfo(res);
    if (!s.valid()) throw EngineError("cannot connect to worker " + endpoint);
    return s;
}

// ---------------------------------------------------------------------------
// Workers

struct Job {
    int goal = 0;
    std::string req;
    Atom atom;
    ExpansionParams params;
};

struct Reply {
    std::size_t worker = 0;
    int goal = 0;
    std::optional<PartialDerivation> derivation;
    std::string error;
    bool fatal = false;
};

class WorkerHandle {
  public:
    virtual ~WorkerHandle() = default;
    virtual void submit(Job job) = 0;
    virtual void shutdown() = 0;
    const std::string &id() const { return id_; }

  protected:
    std::string id_;
};

class LocalWorker final : public WorkerHandle {
  public:
    LocalWorker(std::string id, std::size_t index, ProverContext ctx, Channel<Reply> &inbox)
        : index_(index), ctx_(std::move(ctx)), inbox_(inbox) {
        id_ = std::move(id);
        thread_ = std::thread([this] { loop(); });
    }
    ~LocalWorker() override { shutdown(); }

    void submit(Job job) override { jobs_.push(std::move(job)); }
    void shutdown() override {
        if (!thread_.joinable()) return;
        jobs_.push(std::nullopt);
        thread_.join();
    }

  private:
    void loop() {
        while (auto job = jobs_.pop()) {
            Reply r;
            r.worker = index_;
            r.goal = job->goal;
            try {
                r.derivation = expand_goal(job->atom, ctx_, job->params);
            } catch (const std::exception &e) {
                r.error = e.what();
            }
            inbox_.push(std::move(r));
        }
    }

    std::size_t index_;
    ProverContext ctx_;
    Channel<Reply> &inbox_;
    Channel<std::optional<Job>> jobs_;
    std::thread thread_;
};

class RemoteWorker final : public WorkerHandle {
  public:
    RemoteWorker(const std::string &endpoint, std::size_t index, const std::string &kb_hash,
                 Channel<Reply> &inbox)
        : index_(index), kb_hash_(kb_hash), inbox_(inbox), sock_(connect_to(endpoint)) {
        id_ = endpoint;
        WorkMessage hello;
        hello.type = WorkMessage::Type::Hello;
        hello.worker = "master";
        hello.kb = kb_hash;
        if (!sock_.write_line(encode_message(hello))) throw EngineError("worker " + endpoint + " closed the connection");
        std::string line;
        if (sock_.read_line(line) != Socket::Read::Line) throw EngineError("worker " + endpoint + " closed the connection");
        WorkMessage reply = decode_message(line);
        if (reply.type == WorkMessage::Type::Err) throw EngineError("worker " + endpoint + " refused: " + reply.msg);
        if (reply.type != WorkMessage::Type::Hello || reply.kb != kb_hash)
            throw EngineError("worker " + endpoint + " has a different session");
        thread_ = std::thread([this] { loop(); });
    }
    ~RemoteWorker() override { shutdown(); }

    void submit(Job job) override { jobs_.push(std::move(job)); }
    void shutdown() override {
        if (!thread_.joinable()) return;
        jobs_.push(std::nullopt);
        thread_.join();
    }

  private:
    void loop() {
        bool broken = false;
        while (auto job = jobs_.pop()) {
            Reply r;
            r.worker = index_;
            r.goal = job->goal;
            if (broken) {
                r.error = "connection lost";
                r.fatal = true;
                inbox_.push(std::move(r));
                continue;
            }
            WorkMessage req;
            req.type = WorkMessage::Type::Expand;
            req.req = job->req;
            req.goal = job->atom;
            req.params = job->params;
            req.kb = kb_hash_;
            std::string line;
            try {
                if (!sock_.write_line(encode_message(req)) || sock_.read_line(line) != Socket::Read::Line)
                    throw ProtocolError("connection lost");
                WorkMessage m = decode_message(line);
                if (m.type == WorkMessage::Type::Update && m.req == job->req && m.derivation) {
                    r.derivation = std::move(m.derivation);
                } else if (m.type == WorkMessage::Type::Err) {
                    r.error = m.msg;
                    r.fatal = true;
                } else {
                    throw ProtocolError("unexpected reply");
                }
            } catch (const ProtocolError &e) {
                r.error = e.what();
                r.fatal = true;
            }
            if (r.fatal) {
                broken = true;
                sock_.close();
            }
            inbox_.push(std::move(r));
        }
        if (!broken) {
            WorkMessage bye;
            bye.type = WorkMessage::Type::Bye;
            sock_.write_line(encode_message(bye));
        }
        sock_.close();
    }

    std::size_t index_;
    std::string kb_hash_;
    Channel<Reply> &inbox_;
    Socket sock_;
    Channel<std::optional<Job>> jobs_;
    std::thread thread_;
};

} // namespace

// ---------------------------------------------------------------------------
// Master

std::vector<RankedSolution> rank_solutions(const ProofGraph &g, const Atom &query, std::size_t top_k) {
    std::vector<RankedSolution> out;
    const int root = g.root();
    if (root < 0 || g.goal(root).state != NodeState::Success) return out;
    const auto &node = g.goal(root);
    for (int s = 0; s < static_cast<int>(node.solutions.size()); ++s) {
        RankedSolution r;
        for (const auto &[orig, canon] : g.query_renaming())
            if (auto it = node.solutions[s].binding.find(canon); it != node.solutions[s].binding.end())
                r.bindings["?" + orig] = to_string(it->second);
        const IlpModel m = build_ilp(g, root, s);
        for (const auto &a : solve_top_k(m, std::max<std::size_t>(top_k, 1)))
            r.proofs.push_back(extract_proof_tree(g, m, a, query, g.query_renaming()));
        r.score = r.proofs.empty() ? 0.0 : r.proofs.front().score;
        out.push_back(std::move(r));
    }
    std::stable_sort(out.begin(), out.end(), [](const RankedSolution &a, const RankedSolution &b) {
        if (a.score != b.score) return a.score > b.score;
        return a.bindings < b.bindings;
    });
    return out;
}

QueryResult run_query(const Session &session, const Atom &query, const EngineConfig &cfg) {
    if (cfg.workers < 0) throw EngineError("worker count must not be negative");
    if (cfg.workers == 0 && cfg.remote_workers.empty()) throw EngineError("at least one worker is required");
    if (cfg.max_depth < 0) throw EngineError("max depth must not be negative");

    QueryResult result;
    GraphOptions gopts;
    gopts.join_fallback = cfg.join_fallback && session.similarity ? session.similarity.get() : nullptr;
    gopts.unifier_config = session.unifier;
    gopts.max_term_depth = cfg.max_term_depth;
    const std::size_t lk = cfg.leads_to_k;
    gopts.leads_to = [lk](const ProofGraph &g, int goal, const std::string &action) {
        return leads_to_check(g, goal, action, lk);
    };
    auto graph = std::make_shared<ProofGraph>(gopts);
    result.graph = graph;
    result.root = graph->add_query(query);
    graph->propagate();

    ExpansionParams params = cfg.params;
    params.unifier = cfg.fuzzy && session.similarity ? "fuzzy" : "exact";

    Channel<Reply> inbox;
    std::vector<std::unique_ptr<WorkerHandle>> workers;
    const ProverContext ctx = session.context();
    for (int i = 0; i < cfg.workers; ++i)
        workers.push_back(std::make_unique<LocalWorker>("w" + std::to_string(i), workers.size(), ctx, inbox));
    const std::string kb_hash = cfg.remote_workers.empty() ? std::string{} : session.hash();
    for (const auto &ep : cfg.remote_workers) {
        try {
            workers.push_back(std::make_unique<RemoteWorker>(ep, workers.size(), kb_hash, inbox));
        } catch (const std::exception &e) {
            result.warnings.push_back(e.what());
        }
    }
    if (workers.empty()) throw EngineError("no worker available");

    std::vector<std::size_t> idle;
    for (std::size_t i = 0; i < workers.size(); ++i) idle.push_back(i);
    std::vector<bool> alive(workers.size(), true);
    std::mt19937_64 rng(cfg.seed);
    std::size_t in_flight = 0;
    std::size_t seq = 0;

    auto stop_reached = [&] {
        const auto &root = graph->goal(result.root);
        return cfg.stop_after_solutions > 0 && root.state == NodeState::Success &&
               root.solutions.size() >= cfg.stop_after_solutions;
    };

    auto shutdown = [&] {
        for (auto &w : workers) w->shutdown();
    };

    try {
        while (true) {
            while (!idle.empty() && result.expansions < cfg.max_expansions && !stop_reached()) {
                auto next = graph->next_subgoal(cfg.weights, cfg.max_depth);
                if (!next) break;
                const auto [goal, prio] = *next;
                const std::size_t pick = static_cast<std::size_t>(rng() % idle.size());
                const std::size_t w = idle[pick];
                idle.erase(idle.begin() + static_cast<std::ptrdiff_t>(pick));
                graph->mark_in_flight(goal, true);
                ++result.expansions;
                result.trace.push_back({seq, workers[w]->id(), prio, graph->goal(goal).key});
                Job job;
                job.goal = goal;
                job.req = std::to_string(seq++);
                job.atom = graph->goal(goal).atom;
                job.params = params;
                job.params.depth = prio.d;
                workers[w]->submit(std::move(job));
                ++in_flight;
            }

            if (in_flight == 0) {
                if (stop_reached()) break;
                const bool changed = graph->run_deferred_checks();
                graph->propagate();
                if (changed) continue;
                break;
            }

            Reply r = inbox.pop();
            --in_flight;
            if (r.derivation) {
                auto merged = graph->merge_update(r.goal, *r.derivation);
                if (merged.discarded) {
                    result.warnings.push_back(merged.warning);
                    graph->mark_in_flight(r.goal, false);
                }
                graph->propagate();
            } else {
                result.warnings.push_back("worker " + workers[r.worker]->id() + ": " + r.error);
                graph->mark_in_flight(r.goal, false);
                graph->propagate();
            }
            if (r.fatal) {
                alive[r.worker] = false;
                if (std::none_of(alive.begin(), alive.end(), [](bool a) { return a; }))
                    throw EngineError("all workers failed");
            } else {
                idle.insert(std::upper_bound(idle.begin(), idle.end(), r.worker), r.worker);
            }
        }
    } catch (...) {
        // let in-flight jobs finish before the workers go away
        while (in_flight > 0) {
            inbox.pop();
            --in_flight;
        }
        shutdown();
        throw;
    }
    shutdown();

    result.solutions = rank_solutions(*graph, query, cfg.top_k);
    return result;
}

// ---------------------------------------------------------------------------
// Worker server

std::size_t serve_worker(const Session &session, const ServeOptions &opts) {
    const int lfd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (lfd < 0) throw EngineError("cannot create socket");
    Socket listener(lfd);
    int yes = 1;
    ::setsockopt(lfd, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_ANY);
    addr.sin_port = htons(static_cast<std::uint16_t>(opts.port));
    if (::bind(lfd, reinterpret_cast<sockaddr *>(&addr), sizeof addr) != 0)
        throw EngineError("cannot bind port " + std::to_string(opts.port));
    if (::listen(lfd, 8) != 0) throw EngineError("cannot listen");
    socklen_t len = sizeof addr;
    ::getsockname(lfd, reinterpret_cast<sockaddr *>(&addr), &len);
    if (opts.on_listening) opts.on_listening(ntohs(addr.sin_port));

    const std::string hash = session.hash();
    const ProverContext ctx = session.context();
    std::size_t answered = 0;
    const int slice = 100;
    auto stopped = [&] { return opts.stop && opts.stop->load(); };

    while (!stopped()) {
        int waited = 0;
        bool ready = false;
        while (!stopped()) {
            pollfd p{lfd, POLLIN, 0};
            if (::poll(&p, 1, slice) > 0) {
                ready = true;
                break;
            }
            waited += slice;
            if (opts.idle_timeout_ms > 0 && waited >= opts.idle_timeout_ms) return answered;
        }
        if (!ready) break;
        const int cfd = ::accept(lfd, nullptr, nullptr);
        if (cfd < 0) continue;
        Socket conn(cfd);

        auto send_err = [&](const std::string &req, const std::string &msg) {
            WorkMessage err;
            err.type = WorkMessage::Type::Err;
            err.req = req;
            err.msg = msg;
            conn.write_line(encode_message(err));
        };

        bool greeted = false;
        while (true) {
            std::string line;
            int waited_conn = 0;
            Socket::Read rd;
            do {
                rd = conn.read_line(line, slice);
                if (rd == Socket::Read::Timeout) waited_conn += slice;
                if (stopped()) return answered;
                if (opts.idle_timeout_ms > 0 && waited_conn >= opts.idle_timeout_ms) return answered;
            } while (rd == Socket::Read::Timeout);
            if (rd == Socket::Read::Closed) break;

            WorkMessage m;
            try {
                m = decode_message(line);
            } catch (const ProtocolError &e) {
                send_err("", e.what());
                break;
            }
            if (!greeted) {
                if (m.type != WorkMessage::Type::Hello) {
                    send_err("", "expected hello");
                    break;
                }
                if (m.kb != hash) {
                    send_err("", "session hash mismatch: worker has " + hash);
                    break;
                }
                WorkMessage hello;
                hello.type = WorkMessage::Type::Hello;
                hello.worker = opts.worker_id;
                hello.kb = hash;
                conn.write_line(encode_message(hello));
                greeted = true;
                continue;
            }
            if (m.type == WorkMessage::Type::Bye) return answered;
            if (m.type != WorkMessage::Type::Expand) {
                send_err(m.req, "unexpected message");
                break;
            }
            if (m.kb != hash) {
                send_err(m.req, "session hash mismatch");
                continue;
            }
            WorkMessage up;
            up.type = WorkMessage::Type::Update;
            up.req = m.req;
            up.done = true;
            try {
                up.derivation = expand_goal(*m.goal, ctx, m.params);
            } catch (const std::exception &e) {
                send_err(m.req, e.what());
                continue;
            }
            ++answered;
            if (!conn.write_line(encode_message(up))) break;
        }
    }
    return answered;
}

} // namespace bc
