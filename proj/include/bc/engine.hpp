#pragma once

#include "bc/drg.hpp"
#include "bc/extract.hpp"
#include "bc/graph.hpp"
#include "bc/provers.hpp"

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace bc {

/// Everything a worker needs besides the goal: the KB and rule sources.
struct Session {
    KnowledgeBase kb;
    std::vector<RuleTemplate> templates;
    TypeTaxonomy taxonomy;
    std::shared_ptr<TableSimilarity> similarity; // null: exact matching only
    std::vector<Rule> canned;
    UnifierConfig unifier;

    /// Hash over every component; workers must agree with the master.
    std::string hash() const;
    /// Prover resources; refers to this session, which must outlive it.
    ProverContext context() const;
};

struct EngineConfig {
    int workers = 1;
    std::vector<std::string> remote_workers; // host:port
    std::size_t max_expansions = 500;
    int max_depth = 12;
    std::size_t stop_after_solutions = 0; // 0: exhaust the budget
    SelectionWeights weights;
    ExpansionParams params;
    bool fuzzy = true;          // fuzzy unifier when a similarity table is loaded
    bool join_fallback = true;  // similarity rescue of failed joins
    std::uint64_t seed = 0;
    std::size_t top_k = 1;
    std::size_t leads_to_k = 16;
    int max_term_depth = 8;
};

struct TraceRecord {
    std::size_t seq = 0;
    std::string worker;
    Priority priority;
    std::string key;
};

/// `expand <seq> <worker> <priority> <C> <D> <X> <P> <key>`, tab separated.
std::string format_trace_line(const TraceRecord &r);

struct RankedSolution {
    std::map<std::string, std::string> bindings; // query variable -> value
    double score = 0.0;
    std::vector<ProofTree> proofs;
};

struct QueryResult {
    std::shared_ptr<ProofGraph> graph;
    int root = 0;
    std::vector<RankedSolution> solutions;
    std::vector<TraceRecord> trace;
    std::size_t expansions = 0;
    std::vector<std::string> warnings;
};

/// Builds the proof graph for `query` with the master loop and returns its
/// solutions ranked by their best proof.
QueryResult run_query(const Session &session, const Atom &query, const EngineConfig &cfg);

/// Ranks the query node's solutions of a finished graph.
std::vector<RankedSolution> rank_solutions(const ProofGraph &g, const Atom &query, std::size_t top_k);

struct ServeOptions {
    int port = 0;                     // 0: pick a free port
    int idle_timeout_ms = 0;          // 0: wait forever
    std::string worker_id = "worker";
    std::function<void(int)> on_listening; // receives the bound port
    std::atomic<bool> *stop = nullptr;
};

/// Serves expansion requests over TCP until a `bye` arrives, the idle timeout
/// passes or `stop` is set. Returns the number of requests answered.
std::size_t serve_worker(const Session &session, const ServeOptions &opts);

} // namespace bc
