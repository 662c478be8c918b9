#include "bc/loader.hpp"
#include "bc/text.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>

namespace {

struct Options {
    bc::SessionPaths paths;
    std::string query;
    int workers = 1;
    std::vector<std::string> remote;
    std::size_t max_expansions = 500;
    int max_depth = 12;
    std::size_t top_k = 1;
    std::string format = "text";
    std::uint64_t seed = 0;
    std::string trace;
    int port = 0;
    int idle_timeout_ms = 0;
    std::string worker_id = "worker";
};

void add_inputs(CLI::App *cmd, Options &o) {
    cmd->add_option("--kb", o.paths.kb, "Knowledge base file (facts and rules)")->required();
    cmd->add_option("--templates", o.paths.templates, "Rule template file for the dynamic rule generator");
    cmd->add_option("--taxonomy", o.paths.taxonomy, "Type taxonomy file (`X isa Y.` lines)");
    cmd->add_option("--sim", o.paths.sim, "Similarity table (tab separated: sym, sym, score)");
    cmd->add_option("--canned-rules", o.paths.canned, "Pre-generated rules served by the canned generator");
}

void add_engine(CLI::App *cmd, Options &o) {
    cmd->add_option("--query", o.query, "Query atom or conjunction, variables written ?x")->required();
    cmd->add_option("--workers", o.workers, "In-process workers")->check(CLI::Range(0, 256));
    cmd->add_option("--remote-worker", o.remote, "Remote worker host:port (repeatable)");
    cmd->add_option("--max-expansions", o.max_expansions, "Expansion budget");
    cmd->add_option("--max-depth", o.max_depth, "Maximum goal distance from the query")->check(CLI::NonNegativeNumber);
    cmd->add_option("--top-k", o.top_k, "Proofs reported per solution")->check(CLI::PositiveNumber);
    cmd->add_option("--format", o.format, "Output format")->check(CLI::IsMember({"text", "json", "dot"}));
    cmd->add_option("--seed", o.seed, "Seed for worker assignment");
    cmd->add_option("--trace", o.trace, "Write the expansion log to this file");
}

std::optional<bc::Session> load(const Options &o) {
    bc::LoadResult r = bc::load_session(o.paths);
    for (const auto &w : r.warnings) std::cerr << w << "\n";
    for (const auto &e : r.errors) std::cerr << e << "\n";
    return std::move(r.session);
}

bool write_trace(const std::string &path, const std::vector<bc::TraceRecord> &trace) {
    std::ofstream out(path);
    if (!out) {
        std::cerr << path << ": error: cannot write trace\n";
        return false;
    }
    for (const auto &t : trace) out << bc::format_trace_line(t) << "\n";
    return true;
}

int run(const Options &o, bool trace_only) {
    auto session = load(o);
    if (!session) return 2;
    bc::Parsed<bc::Atom> q = bc::parse_query(o.query);
    for (const auto &d : q.diagnostics) std::cerr << bc::format_diagnostic("<query>", d) << "\n";
    if (!q.ok()) return 2;

    bc::EngineConfig cfg;
    cfg.workers = o.workers;
    cfg.remote_workers = o.remote;
    cfg.max_expansions = o.max_expansions;
    cfg.max_depth = o.max_depth;
    cfg.top_k = o.top_k;
    cfg.seed = o.seed;

    bc::QueryResult res;
    try {
        res = bc::run_query(*session, *q.value, cfg);
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    for (const auto &w : res.warnings) std::cerr << "warning: " << w << "\n";

    if (trace_only) {
        if (o.trace.empty()) {
            for (const auto &t : res.trace) std::cout << bc::format_trace_line(t) << "\n";
        } else if (!write_trace(o.trace, res.trace)) {
            return 2;
        }
        return res.solutions.empty() ? 1 : 0;
    }
    if (!o.trace.empty() && !write_trace(o.trace, res.trace)) return 2;

    if (o.format == "json") {
        for (const auto &s : res.solutions) {
            nlohmann::json proofs = nlohmann::json::array();
            for (const auto &p : s.proofs)
                proofs.push_back(nlohmann::json::parse(bc::render_explanation(p, bc::ExplanationFormat::Json)));
            std::cout << nlohmann::json{{"bindings", s.bindings}, {"score", s.score}, {"proofs", proofs}}.dump()
                      << "\n";
        }
        if (res.solutions.empty()) std::cout << nlohmann::json{{"solutions", 0}}.dump() << "\n";
    } else {
        const auto fmt = o.format == "dot" ? bc::ExplanationFormat::Dot : bc::ExplanationFormat::Text;
        bool first = true;
        for (const auto &s : res.solutions)
            for (const auto &p : s.proofs) {
                if (!first) std::cout << "\n";
                first = false;
                std::cout << bc::render_explanation(p, fmt);
            }
        if (res.solutions.empty() && fmt == bc::ExplanationFormat::Text) std::cout << "No solutions.\n";
    }
    return res.solutions.empty() ? 1 : 0;
}

int check(const Options &o) {
    auto session = load(o);
    if (!session) return 2;
    const std::string summary = std::to_string(session->kb.facts().size()) + " facts, " +
                                std::to_string(session->kb.rules().size()) + " rules, " +
                                std::to_string(session->templates.size()) + " templates, " +
                                std::to_string(session->canned.size()) + " canned rules";
    if (o.format == "json")
        std::cout << nlohmann::json{{"ok", true},
                                    {"facts", session->kb.facts().size()},
                                    {"rules", session->kb.rules().size()},
                                    {"templates", session->templates.size()},
                                    {"canned", session->canned.size()},
                                    {"hash", session->hash()}}
                         .dump()
                  << "\n";
    else
        std::cout << "ok: " << summary << "\n";
    return 0;
}

int serve(const Options &o) {
    auto session = load(o);
    if (!session) return 2;
    bc::ServeOptions so;
    so.port = o.port;
    so.idle_timeout_ms = o.idle_timeout_ms;
    so.worker_id = o.worker_id;
    so.on_listening = [](int port) { std::cout << "listening " << port << std::endl; };
    try {
        const std::size_t n = bc::serve_worker(*session, so);
        std::cerr << "served " << n << " requests\n";
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Confidence-weighted backward chaining over a fact and rule base"};
    app.require_subcommand(1);
    Options o;

    auto *query = app.add_subcommand("query", "Answer a query and print ranked proofs");
    add_inputs(query, o);
    add_engine(query, o);

    auto *chk = app.add_subcommand("check", "Parse and validate the input files");
    add_inputs(chk, o);
    chk->add_option("--format", o.format, "Output format")->check(CLI::IsMember({"text", "json"}));

    auto *trace = app.add_subcommand("trace", "Run a query and write the expansion log (stdout without --trace)");
    add_inputs(trace, o);
    add_engine(trace, o);

    auto *worker = app.add_subcommand("serve-worker", "Serve expansion requests over TCP");
    add_inputs(worker, o);
    worker->add_option("--port", o.port, "Port to bind, 0 picks a free one")->check(CLI::Range(0, 65535));
    worker->add_option("--idle-timeout", o.idle_timeout_ms, "Exit after this many idle milliseconds, 0 never");
    worker->add_option("--worker-id", o.worker_id, "Name announced in the handshake");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    if (*query) return run(o, false);
    if (*trace) return run(o, true);
    if (*chk) return check(o);
    return serve(o);
}
