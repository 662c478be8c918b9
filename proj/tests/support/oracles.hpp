#pragma once

// Independent reference implementations used by the unit and acceptance tests.

#include "bc/extract.hpp"
#include "bc/model.hpp"
#include "bc/provers.hpp"

#include <random>
#include <set>
#include <string>
#include <vector>

namespace oracle {

struct KbShape {
    int max_facts = 30;
    int max_rules = 15;
    int predicates = 5;
    int constants = 4;
    bool variables = true; // also emit range-restricted rules with variables
    bool random_confidence = false; // U[0.5, 1] instead of 1
};

/// Random Horn KB, every confidence 1 unless the shape asks otherwise. Predicate `p<i>` has arity 1 + i % 2.
bc::KnowledgeBase random_horn_kb(std::mt19937_64 &rng, const KbShape &shape = {});

/// Bottom-up naive fixpoint; returns the ground atoms rendered with to_string.
std::set<std::string> forward_chain(const bc::KnowledgeBase &kb);

/// Abstract AND/OR graph: goal vars first (root 0), supports attached to them.
bc::IlpModel random_proof_graph(std::mt19937_64 &rng, int max_goals = 12, int max_supports = 3);

struct Proof {
    std::vector<int> included; // sorted
    double objective = 0.0;
};

/// Every acyclic selection reachable from the root, by exhaustive search.
std::vector<Proof> enumerate_proofs(const bc::IlpModel &m);

/// Cartesian product filtered for equal values on shared variables.
std::vector<bc::JoinedTuple> brute_force_join(const std::vector<std::vector<bc::JoinEntry>> &tables);

} // namespace oracle
