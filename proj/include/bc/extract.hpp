#pragma once

#include "bc/graph.hpp"

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace bc {

/// 0-1 program over proof-graph nodes: one binary per node, the root must be
/// in, an included goal takes exactly one of its supports, an included support
/// takes all of its children, no goal occurs inside its own subtree, and a
/// support with requirements forces those supports in. Objective: maximize
/// the sum of coefficients (log confidences) of included nodes.
struct IlpModel {
    struct Var {
        enum class Kind { Goal, Support };
        Kind kind = Kind::Goal;
        double coef = 0.0;       // ln(confidence), <= 0
        std::vector<int> next;   // goal: alternative supports; support: child goals
        int parent = -1;         // support: owning goal
        std::vector<int> requires_supports;
        std::string label;
    };

    std::vector<Var> vars;
    int root = 0;

    /// Where each variable came from when built from a ProofGraph: goal vars
    /// map to (goal, solution), support vars to a justification.
    std::vector<ChoiceRef> origin;

    int add_goal(double coef = 0.0, std::string label = {});
    int add_support(int goal, double coef, std::vector<int> children, std::string label = {});
};

/// Model for one solution of a goal. Throws EngineError unless the goal
/// succeeded and the solution exists.
IlpModel build_ilp(const ProofGraph &g, int goal, int solution);

struct Assignment {
    std::vector<int> included;   // sorted variable ids
    std::map<int, int> choice;   // goal var -> support var
    double objective = 0.0;
};

/// Exact top-k by repeated branch and bound, each run excluding (no-good) the
/// selections already returned. Ordered by objective; among equal objectives
/// the first selection in the fixed search order wins. Empty when infeasible.
std::vector<Assignment> solve_top_k(const IlpModel &m, std::size_t k);

/// Checks every constraint of the model; empty string when satisfied.
std::string check_assignment(const IlpModel &m, const Assignment &a);

struct FuzzyMatch {
    std::string from;
    std::string to;
    double score = 1.0;
    std::string kind; // "unify" or "merge"
};

struct ProofTree {
    struct Node {
        bool goal = true;
        int var = 0;
        std::string atom;         // goals: instantiated atom
        Atom instance;
        double confidence = 1.0;
        std::vector<int> children;
        int first_seen = -1;      // repeated subtree: index of its first occurrence
        // supports
        std::string kind;
        std::string prover;
        std::string rule_id;
        std::string provenance;
        std::set<std::string> tags;
        std::string text;         // instantiated rule or fact
    };

    std::string query;
    std::map<std::string, std::string> bindings;
    double score = 1.0;
    double objective = 0.0;
    std::vector<Node> nodes;      // nodes[0] is the root
    std::vector<FuzzyMatch> fuzzy;

    bool mentions(const std::string &symbol) const;
    bool uses_tag(const std::string &tag) const;
};

/// Justifications selected by an assignment of a model built from a graph.
std::vector<ChoiceRef> chosen_justifications(const IlpModel &m, const Assignment &a);

/// Unfolds an assignment into a tree. Throws EngineError if the assignment
/// violates the model.
ProofTree extract_proof_tree(const ProofGraph &g, const IlpModel &m, const Assignment &a,
                             const Atom &query, const std::map<std::string, std::string> &query_renaming);

enum class ExplanationFormat { Text, Json, Dot };
std::string render_explanation(const ProofTree &t, ExplanationFormat f);

/// The leadsTo check: the best of the first `k` proofs of `goal` that mentions
/// `action` and uses a `causal` rule.
std::optional<Acceptance> leads_to_check(const ProofGraph &g, int goal, const std::string &action,
                                         std::size_t k = 16);

} // namespace bc
