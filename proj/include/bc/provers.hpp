#pragma once

#include "bc/drg.hpp"
#include "bc/model.hpp"
#include "bc/unify.hpp"

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace bc {

enum class SupportKind {
    Fact,
    Rule,
    ConjunctionJoin,
    AgentfulPhase1,
    AgentfulLeadsTo,
    Inference, // links a goal to a skolemized inference node
};

std::string to_string(SupportKind k);
std::optional<SupportKind> support_kind_from_string(const std::string &s);

/// Justification carried by a support node. For rule-like kinds `unification`
/// relates the parent goal to the (standardized) rule head; for facts it
/// relates the goal to the fact.
struct SupportDescriptor {
    SupportKind kind = SupportKind::Fact;
    std::string prover;
    std::optional<Rule> rule; // standardized apart
    std::optional<Fact> fact;
    double confidence = 1.0;
    std::optional<UnificationResult> unification;
    /// Child-scope bindings fixed before any join (agentful leadsTo).
    Bindings fixed;
    /// Action constant an agentful support must explain.
    std::string action;

    /// Identity used to drop duplicate supports under one goal.
    std::string signature() const;
};

/// Output of a single-step expansion. Goal atoms are alpha-canonical; edges
/// from a support to a child goal map support-scope variables to the child's
/// canonical variables.
struct PartialDerivation {
    struct GoalNode {
        int id = 0;
        Atom atom;
    };
    struct SupportNode {
        int id = 0;
        SupportDescriptor descriptor;
    };
    struct Edge {
        int from = 0;
        int to = 0;
        std::map<std::string, std::string> var_map;
    };

    int root = 0;
    std::vector<GoalNode> goals;
    std::vector<SupportNode> supports;
    std::vector<Edge> edges;

    const GoalNode *goal(int id) const;
    const SupportNode *support(int id) const;
    /// Child goal ids of a support, in edge order.
    std::vector<int> children_of(int support) const;
    bool root_only() const { return supports.empty(); }
};

/// Throws EngineError unless the derivation is rooted, bipartite and acyclic
/// and each support has the number of children its kind requires.
void validate(const PartialDerivation &pd);

/// Adds every node of `other` (except its root, which is identified with
/// `into`'s root) to `into`.
void merge_into(PartialDerivation &into, const PartialDerivation &other);

struct ExpansionParams {
    std::size_t max_rule_matches = 64;
    std::size_t max_fact_matches = 64;
    std::string unifier = "exact"; // or "fuzzy"
    bool drg = true;
    int depth = 0;
};

/// Read-only resources a prover works against.
struct ProverContext {
    const KnowledgeBase *kb = nullptr;
    std::shared_ptr<const SimilarityProvider> similarity;
    UnifierConfig unifier_config;
    std::vector<std::shared_ptr<const RuleGenerator>> generators;
};

class Prover {
  public:
    virtual ~Prover() = default;
    virtual std::string name() const = 0;
    virtual bool handles(const Atom &goal) const = 0;
    virtual PartialDerivation prove(const Atom &goal, const ProverContext &ctx,
                                    const ExpansionParams &params) const = 0;
};

/// Root-only derivation for `goal`.
PartialDerivation empty_derivation(const Atom &goal);

/// Fact matching, rule matching, rule generation and conjunction splitting.
class SldPlusProver final : public Prover {
  public:
    std::string name() const override { return "sld+"; }
    bool handles(const Atom &) const override { return true; }
    PartialDerivation prove(const Atom &goal, const ProverContext &ctx,
                            const ExpansionParams &params) const override;
};

/// Rule tagged `agentful` in the KB, or the built-in motivates pattern.
Rule agentful_pattern(const KnowledgeBase &kb);

/// Explains an agent's action: first the agent's goals, then (on the master)
/// whether the action leads to one of them.
class AgentfulProver final : public Prover {
  public:
    std::string name() const override { return "agentful"; }
    bool handles(const Atom &goal) const override;
    PartialDerivation prove(const Atom &goal, const ProverContext &ctx,
                            const ExpansionParams &params) const override;

    /// Variable of the pattern's head naming the explained goal.
    static std::string goal_var(const Rule &pattern);
};

/// Runs every prover that handles the goal and unions their derivations.
PartialDerivation expand_goal(const Atom &goal, const ProverContext &ctx,
                              const ExpansionParams &params);

/// One child table for joinSolutions: bindings already in support scope.
struct JoinEntry {
    Bindings binding;
    double score = 1.0;
};

struct JoinedTuple {
    Bindings binding;
    std::vector<std::size_t> indices; // row taken from each table
    double score = 1.0;               // product of child scores and merge factor
    double factor = 1.0;              // merge factor alone
    std::map<std::string, std::string> metadata;
};

struct JoinOptions {
    /// Null disables the similarity fallback (exact-only join).
    const SimilarityProvider *fallback = nullptr;
    UnifierConfig config;
    Bindings initial;
};

/// Merges `entry` into `acc`. On a clash between ground values the fallback
/// may rescue the tuple: the earlier value is kept and `factor` shrinks.
bool join_binding(Bindings &acc, const Bindings &entry, const JoinOptions &opts, double &factor,
                  std::map<std::string, std::string> &metadata);

/// Natural join of the tables on shared variables.
std::vector<JoinedTuple> join_solutions(const std::vector<std::vector<JoinEntry>> &tables,
                                        const JoinOptions &opts);

} // namespace bc
