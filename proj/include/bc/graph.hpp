#pragma once

#include "bc/provers.hpp"

#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace bc {

enum class NodeState { Unknown, Success, Failure };
std::string to_string(NodeState s);

/// Selects justification `justification` for solution `solution` of goal `goal`.
struct ChoiceRef {
    int goal = 0;
    int solution = 0;
    int justification = 0;

    friend auto operator<=>(const ChoiceRef &, const ChoiceRef &) = default;
};

/// One way a support produced a goal solution: the child solution it used at
/// each position.
struct Justification {
    int support = 0;
    std::vector<int> child_solutions;
    double factor = 1.0; // join-fallback penalty
    std::map<std::string, std::string> metadata;
    /// Choices any proof using this justification must make (agentful).
    std::vector<ChoiceRef> certificate;
};

struct GoalSolution {
    Bindings binding; // over the goal atom's variables, ground
    double score = 1.0;
    std::vector<Justification> justifications;
};

struct GoalNode {
    int id = 0;
    Atom atom; // alpha-canonical
    std::string key;
    NodeState state = NodeState::Unknown;
    std::vector<GoalSolution> solutions;
    bool expanded = false;
    bool in_flight = false;
    bool derived = false; // ground skolemized inference created by the master
    std::vector<int> supports;
    std::vector<std::pair<int, int>> parents; // (support, child position)

    /// Index of the solution with this binding, or -1.
    int find_solution(const Bindings &b) const;
};

struct SupportNode {
    int id = 0;
    SupportDescriptor descriptor;
    int parent = 0;
    std::vector<int> children;
    /// Per child: support-scope variable -> child canonical variable.
    std::vector<std::map<std::string, std::string>> child_maps;
    NodeState state = NodeState::Unknown;
    /// Per child: solutions delivered so far, in delivery order.
    std::vector<std::vector<int>> entries;
    /// For mirror supports under derived nodes: the support being mirrored.
    int mirror_of = -1;

    // agentful bookkeeping
    std::size_t phase1_seen = 0;
    bool accepted = false;
    std::vector<ChoiceRef> certificate;
    double accepted_score = 0.0;
    std::uint64_t checked_version = 0;
    struct Pending {
        Bindings binding;
        std::vector<int> child_solutions;
        double factor = 1.0;
        std::map<std::string, std::string> metadata;
    };
    std::vector<Pending> pending;
};

struct PropagationEvent {
    int trigger = 0;
    NodeState state = NodeState::Unknown;
    std::vector<int> new_results; // solution indices
};

struct SelectionWeights {
    double conf = 1.0;
    double dist = 0.1;
    double cplx = 0.05;
    double plaus = 0.2;
    /// Plausibility of a goal's text in [0, 1]; absent means 1.
    std::function<double(const std::string &)> plausibility;
};

struct Priority {
    double value = 0.0;
    double c = 0.0;
    int d = 0;
    int x = 0;
    double p = 1.0;
};

/// Result of the leadsTo check for a goal: the proof choices that satisfied it.
struct Acceptance {
    std::vector<ChoiceRef> certificate;
    double score = 1.0;
};

struct GraphOptions {
    /// Null disables the similarity fallback in joins.
    const SimilarityProvider *join_fallback = nullptr;
    UnifierConfig unifier_config;
    /// Solutions whose terms nest deeper than this are dropped.
    int max_term_depth = 8;
    /// Decides whether a proof of `goal` explains `action`.
    std::function<std::optional<Acceptance>(const class ProofGraph &, int goal, const std::string &action)>
        leads_to;
};

struct MergeResult {
    bool discarded = false;
    std::string warning;
    int new_goals = 0;
    int new_supports = 0;
    int ignored_supports = 0;
};

class ProofGraph {
  public:
    explicit ProofGraph(GraphOptions opts = {});

    /// Creates (or finds) the goal node for the query.
    int add_query(const Atom &query);
    int root() const { return root_; }
    /// Query variable name -> canonical variable name.
    const std::map<std::string, std::string> &query_renaming() const { return query_renaming_; }

    const std::vector<GoalNode> &goals() const { return goals_; }
    const std::vector<SupportNode> &supports() const { return supports_; }
    const GoalNode &goal(int id) const { return goals_.at(id); }
    const SupportNode &support(int id) const { return supports_.at(id); }
    std::optional<int> find_goal(const std::string &key) const;
    std::uint64_t version() const { return version_; }

    void mark_in_flight(int goal, bool in_flight);

    /// Folds a worker's derivation for `goal` into the graph. Events are queued
    /// and run by propagate().
    MergeResult merge_update(int goal, const PartialDerivation &pd);

    /// Runs queued propagation to a fixpoint; returns the events processed.
    std::vector<PropagationEvent> propagate();

    /// Re-runs pending leadsTo checks if the graph changed since their last
    /// run. True if anything changed.
    bool run_deferred_checks();

    /// Best unexpanded goal within `max_depth`, if any.
    std::optional<std::pair<int, Priority>> next_subgoal(const SelectionWeights &w, int max_depth) const;
    /// Priority of one goal; nullopt if unreachable from the query.
    std::optional<Priority> priority_score(int goal, const SelectionWeights &w) const;

    /// Flat JSON record list of nodes and edges.
    std::string snapshot_json() const;

    /// Confidence a justification contributes to a proof.
    double justification_confidence(const Justification &j) const;
    /// Goal atom with a solution's binding applied.
    Atom instantiate(int goal, int solution) const;

  private:
    int intern_goal(const Atom &canonical, bool derived);
    void enqueue(int goal);
    void deliver(int support, std::size_t position);
    void on_phase1(int support);
    void try_accept(int support);
    void produce(int support, const Bindings &beta, const std::vector<int> &child_solutions,
                 double child_score, double factor, const std::map<std::string, std::string> &metadata);
    bool add_solution(int goal, Bindings binding, double score, Justification j);
    void fail_support(int support);
    void check_failure(int goal);
    void link_views(int derived_goal);
    void add_view(int goal, int derived_goal);
    int add_support(int parent, SupportDescriptor d, const std::vector<int> &children,
                    const std::vector<std::map<std::string, std::string>> &maps);
    void catch_up(int support);

    GraphOptions opts_;
    std::vector<GoalNode> goals_;
    std::vector<SupportNode> supports_;
    std::map<std::string, int> index_;
    std::map<int, std::set<std::string>> signatures_;
    std::map<std::pair<int, int>, int> mirrors_; // (derived goal, support) -> mirror
    std::vector<int> derived_;
    std::deque<int> queue_;
    std::set<int> queued_;
    std::map<int, std::size_t> reported_; // goal -> solutions already reported
    std::set<int> failure_reported_;
    std::vector<PropagationEvent> events_;
    int root_ = -1;
    std::map<std::string, std::string> query_renaming_;
    std::uint64_t version_ = 1;
};

} // namespace bc
