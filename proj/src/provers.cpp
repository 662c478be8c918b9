#include "bc/provers.hpp"

#include <algorithm>
#include <functional>
#include <set>

namespace bc {

std::string to_string(SupportKind k) {
    switch (k) {
    case SupportKind::Fact: return "fact";
    case SupportKind::Rule: return "rule";
    case SupportKind::ConjunctionJoin: return "conjunction-join";
    case SupportKind::AgentfulPhase1: return "agentful-phase1";
    case SupportKind::AgentfulLeadsTo: return "agentful-leadsTo";
    case SupportKind::Inference: return "inference";
    }
    return "?";
}

std::optional<SupportKind> support_kind_from_string(const std::string &s) {
    for (auto k : {SupportKind::Fact, SupportKind::Rule, SupportKind::ConjunctionJoin,
                   SupportKind::AgentfulPhase1, SupportKind::AgentfulLeadsTo, SupportKind::Inference})
        if (to_string(k) == s) return k;
    return std::nullopt;
}

namespace {

std::string bindings_text(const Bindings &b) {
    std::string s;
    for (const auto &[v, t] : b) s += "?" + v + "=" + to_string(t) + ";";
    return s;
}

/// Alpha-canonical text of a rule instance, used to detect duplicates coming
/// from different sources.
std::string instance_text(const Rule &r, const Bindings &u) {
    std::vector<Atom> parts{substitute(r.head, u)};
    for (const auto &b : r.body) parts.push_back(substitute(b, u));
    Atom all{"rule$", {}};
    for (const auto &p : parts) all.args.push_back(Term::compound(p.predicate, p.args));
    return canonical_key(all);
}

} // namespace

std::string SupportDescriptor::signature() const {
    std::string s = to_string(kind) + "|";
    const Bindings none;
    const Bindings &u = unification ? unification->substitution.vars : none;
    switch (kind) {
    case SupportKind::Fact:
        s += fact ? to_string(fact->atom) : "";
        if (unification)
            for (const auto &[a, b] : unification->substitution.symbols) s += "|" + a + "=" + b;
        break;
    case SupportKind::Rule:
    case SupportKind::AgentfulPhase1:
        s += rule ? instance_text(*rule, u) : "";
        break;
    case SupportKind::AgentfulLeadsTo:
        s += bindings_text(fixed);
        break;
    case SupportKind::ConjunctionJoin:
        break;
    case SupportKind::Inference:
        s += rule ? to_string(rule->head) : "";
        break;
    }
    return s;
}

// ---------------------------------------------------------------------------
// PartialDerivation

const PartialDerivation::GoalNode *PartialDerivation::goal(int id) const {
    for (const auto &g : goals)
        if (g.id == id) return &g;
    return nullptr;
}

const PartialDerivation::SupportNode *PartialDerivation::support(int id) const {
    for (const auto &s : supports)
        if (s.id == id) return &s;
    return nullptr;
}

std::vector<int> PartialDerivation::children_of(int support) const {
    std::vector<int> out;
    for (const auto &e : edges)
        if (e.from == support) out.push_back(e.to);
    return out;
}

void validate(const PartialDerivation &pd) {
    if (!pd.goal(pd.root)) throw EngineError("derivation root is not a goal node");
    std::set<int> ids;
    for (const auto &g : pd.goals)
        if (!ids.insert(g.id).second) throw EngineError("duplicate local id");
    for (const auto &s : pd.supports)
        if (!ids.insert(s.id).second) throw EngineError("duplicate local id");

    std::map<int, std::vector<int>> out;
    std::map<int, int> parents;
    for (const auto &e : pd.edges) {
        const bool gs = pd.goal(e.from) && pd.support(e.to);
        const bool sg = pd.support(e.from) && pd.goal(e.to);
        if (!gs && !sg) throw EngineError("edge does not alternate goal and support nodes");
        if (gs) ++parents[e.to];
        out[e.from].push_back(e.to);
    }
    for (const auto &s : pd.supports) {
        if (parents[s.id] != 1) throw EngineError("support node without a unique parent goal");
        const auto n = pd.children_of(s.id).size();
        const auto &d = s.descriptor;
        std::size_t want = n;
        switch (d.kind) {
        case SupportKind::Fact: want = 0; break;
        case SupportKind::Rule: want = d.rule ? d.rule->body.size() : 0; break;
        case SupportKind::AgentfulPhase1: want = 1; break;
        case SupportKind::AgentfulLeadsTo: want = 2; break;
        case SupportKind::Inference: want = 1; break;
        case SupportKind::ConjunctionJoin: break;
        }
        if (n != want) throw EngineError("support has the wrong number of children");
    }

    // rooted and acyclic
    std::map<int, int> color;
    std::function<void(int)> visit = [&](int v) {
        color[v] = 1;
        for (int w : out[v]) {
            if (color[w] == 1) throw EngineError("derivation contains a cycle");
            if (color[w] == 0) visit(w);
        }
        color[v] = 2;
    };
    visit(pd.root);
    for (int id : ids)
        if (color[id] == 0) throw EngineError("node unreachable from the derivation root");
}

void merge_into(PartialDerivation &into, const PartialDerivation &other) {
    int offset = 0;
    for (const auto &g : into.goals) offset = std::max(offset, g.id + 1);
    for (const auto &s : into.supports) offset = std::max(offset, s.id + 1);
    auto map_id = [&](int id) { return id == other.root ? into.root : id + offset; };
    for (const auto &g : other.goals)
        if (g.id != other.root) into.goals.push_back({map_id(g.id), g.atom});
    for (const auto &s : other.supports) into.supports.push_back({map_id(s.id), s.descriptor});
    for (const auto &e : other.edges) into.edges.push_back({map_id(e.from), map_id(e.to), e.var_map});
}

PartialDerivation empty_derivation(const Atom &goal) {
    PartialDerivation pd;
    pd.root = 0;
    pd.goals.push_back({0, goal});
    return pd;
}

namespace {

class Builder {
  public:
    explicit Builder(const Atom &goal) : pd_(empty_derivation(goal)) {
        for (const auto &v : vars_of(goal)) identity_[v] = v;
    }

    int add_support(SupportDescriptor d) {
        const int id = next_++;
        pd_.supports.push_back({id, std::move(d)});
        pd_.edges.push_back({pd_.root, id, identity_});
        return id;
    }

    /// Adds a child goal for a support-scope atom.
    void add_child(int support, const Atom &local) {
        std::map<std::string, std::string> ren;
        Atom canon = canonicalize(local, &ren);
        const int id = next_++;
        pd_.goals.push_back({id, std::move(canon)});
        pd_.edges.push_back({support, id, std::move(ren)});
    }

    PartialDerivation take() { return std::move(pd_); }

  private:
    PartialDerivation pd_;
    std::map<std::string, std::string> identity_;
    int next_ = 1;
};

std::vector<UnificationResult> unify_with(const Atom &goal, const Atom &other,
                                          const ProverContext &ctx, const ExpansionParams &params) {
    if (params.unifier == "fuzzy" && ctx.similarity)
        return fuzzy_unify(goal, other, *ctx.kb, *ctx.similarity, ctx.unifier_config);
    if (auto ur = syntactic_unify(goal, other)) return {std::move(*ur)};
    return {};
}

/// Existential head variables must stay free and distinct.
bool existentials_free(const Rule &r, const Bindings &u) {
    if (r.existentials.empty()) return true;
    const auto head_vars = vars_of(r.head);
    for (const auto &e : r.existentials) {
        Term val = substitute(Term::variable(e), u);
        if (!val.is_var()) return false;
        for (const auto &w : head_vars)
            if (w != e && substitute(Term::variable(w), u) == val) return false;
    }
    return true;
}

struct RuleCandidate {
    SupportDescriptor descriptor;
    std::vector<Atom> children;
};

} // namespace

PartialDerivation SldPlusProver::prove(const Atom &goal, const ProverContext &ctx,
                                       const ExpansionParams &params) const {
    Builder b(goal);
    const KnowledgeBase &kb = *ctx.kb;

    if (goal.is_conjunction()) {
        SupportDescriptor d;
        d.kind = SupportKind::ConjunctionJoin;
        d.prover = name();
        const int s = b.add_support(std::move(d));
        for (const auto &c : conjuncts_of(goal)) b.add_child(s, c);
        return b.take();
    }

    const bool fuzzy = params.unifier == "fuzzy" && ctx.similarity;
    auto predicate_candidate = [&](const std::string &pred) {
        return pred == goal.predicate || (fuzzy && ctx.similarity->similarity(pred, goal.predicate) > 0);
    };

    // facts
    std::vector<SupportDescriptor> fact_supports;
    auto try_fact = [&](const Fact &f) {
        for (auto &ur : unify_with(goal, f.atom, ctx, params)) {
            SupportDescriptor d;
            d.kind = SupportKind::Fact;
            d.prover = name();
            d.fact = f;
            d.confidence = f.confidence * ur.score;
            d.unification = std::move(ur);
            fact_supports.push_back(std::move(d));
        }
    };
    if (fuzzy) {
        for (const auto &f : kb.facts())
            if (f.atom.arity() == goal.arity() && predicate_candidate(f.atom.predicate)) try_fact(f);
    } else {
        for (const Fact *f : kb.facts_for(goal.predicate, goal.arity())) try_fact(*f);
    }
    std::stable_sort(fact_supports.begin(), fact_supports.end(),
                     [](const auto &x, const auto &y) { return x.confidence > y.confidence; });
    if (fact_supports.size() > params.max_fact_matches) fact_supports.resize(params.max_fact_matches);

    // static and generated rules, deduplicated by instance at max confidence
    std::vector<RuleCandidate> rules;
    std::map<std::string, std::size_t> by_instance;
    FreshCounter counter(1);
    auto try_rule = [&](const Rule &original, double confidence) {
        if (original.has_tag("agentful")) return;
        Rule r = standardize_apart(original, counter);
        r.confidence = confidence;
        for (auto &ur : unify_with(goal, r.head, ctx, params)) {
            if (!existentials_free(r, ur.substitution.vars)) continue;
            RuleCandidate c;
            for (const auto &atom : r.body) c.children.push_back(substitute(atom, ur.substitution.vars));
            c.descriptor.kind = SupportKind::Rule;
            c.descriptor.prover = name();
            c.descriptor.confidence = confidence * ur.score;
            c.descriptor.rule = r;
            c.descriptor.unification = std::move(ur);
            const auto key = c.descriptor.signature();
            auto it = by_instance.find(key);
            if (it == by_instance.end()) {
                by_instance[key] = rules.size();
                rules.push_back(std::move(c));
            } else if (c.descriptor.confidence > rules[it->second].descriptor.confidence) {
                rules[it->second] = std::move(c);
            }
        }
    };
    if (fuzzy) {
        for (const auto &r : kb.rules())
            if (r.head.arity() == goal.arity() && predicate_candidate(r.head.predicate)) try_rule(r, r.confidence);
    } else {
        for (const Rule *r : kb.rules_for(goal.predicate, goal.arity())) try_rule(*r, r->confidence);
    }
    if (params.drg)
        for (const auto &gen : ctx.generators)
            for (const auto &g : gen->generate(goal, kb)) try_rule(g.rule, g.score);
    std::stable_sort(rules.begin(), rules.end(), [](const auto &x, const auto &y) {
        return x.descriptor.confidence > y.descriptor.confidence;
    });
    if (rules.size() > params.max_rule_matches) rules.resize(params.max_rule_matches);

    for (auto &d : fact_supports) b.add_support(std::move(d));
    for (auto &c : rules) {
        const int s = b.add_support(std::move(c.descriptor));
        for (const auto &child : c.children) b.add_child(s, child);
    }
    return b.take();
}

Rule agentful_pattern(const KnowledgeBase &kb) {
    for (const auto &r : kb.rules())
        if (r.has_tag("agentful") && r.head.arity() == 3 && r.body.size() == 2) return r;
    Rule r;
    r.id = "agentful";
    r.head = {"motivates", {Term::variable("agent"), Term::variable("action"), Term::variable("goal")}};
    r.body = {{"hasGoal", {Term::variable("agent"), Term::variable("goal")}},
              {"leadsTo", {Term::variable("action"), Term::variable("goal")}}};
    r.tags = {"agentful"};
    r.provenance = "builtin-prover";
    return r;
}

std::string AgentfulProver::goal_var(const Rule &pattern) {
    const auto &last = pattern.head.args.back();
    return last.is_var() ? last.name : std::string{};
}

bool AgentfulProver::handles(const Atom &goal) const {
    return goal.predicate == "motivates" && goal.arity() == 3;
}

PartialDerivation AgentfulProver::prove(const Atom &goal, const ProverContext &ctx,
                                        const ExpansionParams &) const {
    const Rule pattern_src = agentful_pattern(*ctx.kb);
    if (goal.predicate != pattern_src.head.predicate || goal.arity() != pattern_src.head.arity() ||
        goal_var(pattern_src).empty())
        return empty_derivation(goal);

    FreshCounter counter(1);
    std::map<std::string, std::string> ren;
    Rule pattern = standardize_apart(pattern_src, counter, &ren);
    auto ur = syntactic_unify(goal, pattern.head);
    if (!ur) return empty_derivation(goal);
    const Bindings &u = ur->substitution.vars;

    const std::string gv = ren.count(goal_var(pattern_src)) ? ren[goal_var(pattern_src)] : "";
    std::string action;
    for (const auto &arg : pattern.head.args) {
        if (arg.is_var() && arg.name == gv) continue;
        Term val = substitute(arg, u);
        if (!val.is_ground()) return empty_derivation(goal);
    }
    for (const auto &arg : pattern.body[1].args) {
        if (arg.is_var() && arg.name == gv) continue;
        action = to_string(substitute(arg, u));
    }

    const Atom child = substitute(pattern.body[0], u);
    Builder b(goal);
    SupportDescriptor d;
    d.kind = SupportKind::AgentfulPhase1;
    d.prover = name();
    d.confidence = pattern.confidence;
    d.rule = pattern;
    d.unification = std::move(*ur);
    d.action = action;
    const int s = b.add_support(std::move(d));
    b.add_child(s, child);
    return b.take();
}

PartialDerivation expand_goal(const Atom &goal, const ProverContext &ctx,
                              const ExpansionParams &params) {
    PartialDerivation pd = empty_derivation(goal);
    AgentfulProver agentful;
    if (agentful.handles(goal)) merge_into(pd, agentful.prove(goal, ctx, params));
    merge_into(pd, SldPlusProver{}.prove(goal, ctx, params));
    return pd;
}

// ---------------------------------------------------------------------------
// Joins

bool join_binding(Bindings &acc, const Bindings &entry, const JoinOptions &opts, double &factor,
                  std::map<std::string, std::string> &metadata) {
    for (const auto &[v, t] : entry) {
        auto it = acc.find(v);
        if (it == acc.end()) {
            acc.emplace(v, t);
            continue;
        }
        if (it->second == t) continue;
        if (!opts.fallback || !it->second.is_ground() || !t.is_ground()) return false;
        auto ur = fuzzy_unify_terms(it->second, t, *opts.fallback, opts.config);
        if (!ur) return false;
        factor *= ur->score;
        metadata["merge:" + to_string(it->second) + "=" + to_string(t)] = format_real(ur->score);
    }
    return true;
}

std::vector<JoinedTuple> join_solutions(const std::vector<std::vector<JoinEntry>> &tables,
                                        const JoinOptions &opts) {
    std::vector<JoinedTuple> out;
    JoinedTuple cur;
    cur.binding = opts.initial;
    std::function<void(std::size_t)> rec = [&](std::size_t i) {
        if (i == tables.size()) {
            out.push_back(cur);
            return;
        }
        for (std::size_t r = 0; r < tables[i].size(); ++r) {
            JoinedTuple saved = cur;
            double f = 1.0;
            if (join_binding(cur.binding, tables[i][r].binding, opts, f, cur.metadata)) {
                cur.indices.push_back(r);
                cur.factor *= f;
                cur.score *= tables[i][r].score * f;
                rec(i + 1);
            }
            cur = std::move(saved);
        }
    };
    rec(0);
    return out;
}

} // namespace bc
