#include "bc/graph.hpp"

#include <json.hpp>

#include <algorithm>
#include <queue>

namespace bc {

std::string to_string(NodeState s) {
    switch (s) {
    case NodeState::Unknown: return "unknown";
    case NodeState::Success: return "success";
    case NodeState::Failure: return "failure";
    }
    return "?";
}

int GoalNode::find_solution(const Bindings &b) const {
    for (std::size_t i = 0; i < solutions.size(); ++i)
        if (solutions[i].binding == b) return static_cast<int>(i);
    return -1;
}

ProofGraph::ProofGraph(GraphOptions opts) : opts_(std::move(opts)) {}

int ProofGraph::add_query(const Atom &query) {
    Atom canon = canonicalize(query, &query_renaming_);
    root_ = intern_goal(canon, false);
    return root_;
}

std::optional<int> ProofGraph::find_goal(const std::string &key) const {
    auto it = index_.find(key);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

namespace {

int max_depth(const Bindings &b) {
    int d = 0;
    for (const auto &[v, t] : b) d = std::max(d, t.depth());
    return d;
}

Atom term_as_atom(const Term &t) { return Atom{t.name, t.is_compound() ? t.args : std::vector<Term>{}}; }

} // namespace

int ProofGraph::intern_goal(const Atom &canonical, bool derived) {
    const auto key = canonical_key(canonical);
    if (auto it = index_.find(key); it != index_.end()) return it->second;
    GoalNode g;
    g.id = static_cast<int>(goals_.size());
    g.atom = canonical;
    g.key = key;
    g.derived = derived;
    g.expanded = derived;
    goals_.push_back(std::move(g));
    index_[key] = goals_.back().id;
    ++version_;
    const int id = goals_.back().id;
    if (derived) {
        derived_.push_back(id);
        link_views(id);
    } else {
        for (int d : std::vector<int>(derived_)) add_view(id, d);
    }
    return id;
}

void ProofGraph::mark_in_flight(int goal, bool in_flight) {
    goals_.at(goal).in_flight = in_flight;
    if (!in_flight) check_failure(goal);
}

int ProofGraph::add_support(int parent, SupportDescriptor d, const std::vector<int> &children,
                            const std::vector<std::map<std::string, std::string>> &maps) {
    if (!signatures_[parent].insert(d.signature()).second) return -1;
    SupportNode s;
    s.id = static_cast<int>(supports_.size());
    s.descriptor = std::move(d);
    s.parent = parent;
    s.children = children;
    s.child_maps = maps;
    s.entries.resize(children.size());
    supports_.push_back(std::move(s));
    const int id = supports_.back().id;
    goals_[parent].supports.push_back(id);
    for (std::size_t i = 0; i < children.size(); ++i)
        goals_[children[i]].parents.emplace_back(id, static_cast<int>(i));
    ++version_;
    return id;
}

void ProofGraph::link_views(int derived_goal) {
    for (std::size_t g = 0; g < goals_.size(); ++g) add_view(static_cast<int>(g), derived_goal);
}

void ProofGraph::add_view(int goal, int derived_goal) {
    if (goal == derived_goal || goals_[goal].derived || goals_[goal].state == NodeState::Failure) return;
    auto ur = syntactic_unify(goals_[goal].atom, goals_[derived_goal].atom);
    if (!ur) return;
    SupportDescriptor d;
    d.kind = SupportKind::Inference;
    d.prover = "master";
    d.fact = Fact{goals_[derived_goal].atom, 1.0, "derived"};
    d.unification = std::move(*ur);
    const int s = add_support(goal, std::move(d), {derived_goal}, {{}});
    if (s >= 0) catch_up(s);
}

void ProofGraph::enqueue(int goal) {
    if (queued_.insert(goal).second) queue_.push_back(goal);
}

MergeResult ProofGraph::merge_update(int goal, const PartialDerivation &pd) {
    MergeResult res;
    if (goal < 0 || goal >= static_cast<int>(goals_.size())) {
        res.discarded = true;
        res.warning = "update for unknown goal " + std::to_string(goal);
        return res;
    }
    try {
        validate(pd);
    } catch (const EngineError &e) {
        res.discarded = true;
        res.warning = std::string("malformed update: ") + e.what();
        return res;
    }
    if (canonical_key(pd.goal(pd.root)->atom) != goals_[goal].key) {
        res.discarded = true;
        res.warning = "update root does not match goal " + goals_[goal].key;
        return res;
    }
    ++version_;

    // the goal stays unexpanded until every support is in, so a support that
    // fails on arrival cannot fail the goal before its siblings are added
    std::map<int, int> global{{pd.root, goal}};
    std::deque<int> work{pd.root};
    while (!work.empty()) {
        const int local = work.front();
        work.pop_front();
        for (const auto &e : pd.edges) {
            if (e.from != local) continue;
            const auto *sn = pd.support(e.to);
            std::vector<int> children;
            std::vector<std::map<std::string, std::string>> maps;
            for (const auto &ce : pd.edges) {
                if (ce.from != sn->id) continue;
                auto it = global.find(ce.to);
                if (it == global.end()) {
                    const std::size_t before = goals_.size();
                    const int gid = intern_goal(pd.goal(ce.to)->atom, false);
                    if (goals_.size() > before) ++res.new_goals;
                    it = global.emplace(ce.to, gid).first;
                    work.push_back(ce.to);
                }
                children.push_back(it->second);
                maps.push_back(ce.var_map);
            }
            const int s = add_support(global.at(local), sn->descriptor, children, maps);
            if (s < 0) {
                ++res.ignored_supports;
                continue;
            }
            ++res.new_supports;
            if (supports_[s].descriptor.kind == SupportKind::Fact) {
                produce(s, {}, {}, 1.0, 1.0, {});
            } else {
                catch_up(s);
            }
        }
    }
    goals_[goal].expanded = true;
    goals_[goal].in_flight = false;
    check_failure(goal);
    return res;
}

void ProofGraph::catch_up(int support) {
    for (std::size_t i = 0; i < supports_[support].children.size(); ++i) {
        if (goals_[supports_[support].children[i]].state == NodeState::Failure) {
            fail_support(support);
            return;
        }
        deliver(support, i);
    }
}

void ProofGraph::deliver(int support, std::size_t position) {
    if (supports_[support].state == NodeState::Failure) return;
    const int child = supports_[support].children[position];
    const SupportKind kind = supports_[support].descriptor.kind;
    while (supports_[support].entries[position].size() < goals_[child].solutions.size()) {
        const int sol = static_cast<int>(supports_[support].entries[position].size());
        supports_[support].entries[position].push_back(sol);
        if (kind == SupportKind::AgentfulPhase1 || supports_[support].mirror_of >= 0) continue;

        const SupportNode &sp = supports_[support];
        std::vector<std::vector<JoinEntry>> tables(sp.children.size());
        std::vector<std::vector<int>> rows(sp.children.size());
        for (std::size_t i = 0; i < sp.children.size(); ++i) {
            std::vector<int> idx = i == position ? std::vector<int>{sol} : sp.entries[i];
            const GoalNode &c = goals_[sp.children[i]];
            for (int k : idx) {
                JoinEntry e;
                for (const auto &[lv, cv] : sp.child_maps[i]) {
                    auto it = c.solutions[k].binding.find(cv);
                    if (it != c.solutions[k].binding.end()) e.binding[lv] = it->second;
                }
                e.score = c.solutions[k].score;
                tables[i].push_back(std::move(e));
            }
            rows[i] = std::move(idx);
        }
        JoinOptions jo;
        jo.fallback = kind == SupportKind::AgentfulLeadsTo ? nullptr : opts_.join_fallback;
        jo.config = opts_.unifier_config;
        jo.initial = sp.descriptor.fixed;
        for (const auto &t : join_solutions(tables, jo)) {
            std::vector<int> child_solutions;
            double child_score = 1.0;
            for (std::size_t i = 0; i < t.indices.size(); ++i) {
                child_solutions.push_back(rows[i][t.indices[i]]);
                child_score *= tables[i][t.indices[i]].score;
            }
            produce(support, t.binding, child_solutions, child_score, t.factor, t.metadata);
        }
    }
    if (kind == SupportKind::AgentfulPhase1) on_phase1(support);
    if (kind == SupportKind::AgentfulLeadsTo && !supports_[support].accepted &&
        !supports_[support].pending.empty())
        try_accept(support);
}

void ProofGraph::on_phase1(int support) {
    const int child = supports_[support].children[0];
    while (supports_[support].phase1_seen < goals_[child].solutions.size()) {
        const std::size_t k = supports_[support].phase1_seen++;
        const SupportNode &sp = supports_[support];
        const auto &d = sp.descriptor;
        const Bindings &u = d.unification->substitution.vars;
        const Term local = substitute(Term::variable(AgentfulProver::goal_var(*d.rule)), u);
        Term gstar = local;
        if (local.is_var()) {
            auto cv = sp.child_maps[0].find(local.name);
            if (cv == sp.child_maps[0].end()) continue;
            auto it = goals_[child].solutions[k].binding.find(cv->second);
            if (it == goals_[child].solutions[k].binding.end()) continue;
            gstar = it->second;
        }
        if (!gstar.is_ground() || gstar.is_var()) continue;

        SupportDescriptor l = d;
        l.kind = SupportKind::AgentfulLeadsTo;
        l.fixed.clear();
        if (local.is_var()) l.fixed[local.name] = gstar;
        const int parent = sp.parent;
        const auto h_map = sp.child_maps[0];
        const int gn = intern_goal(term_as_atom(gstar), false);
        const int s = add_support(parent, std::move(l), {child, gn}, {h_map, {}});
        if (s >= 0) catch_up(s);
    }
}

void ProofGraph::try_accept(int support) {
    SupportNode *sp = &supports_[support];
    const int gn = sp->children[1];
    sp->checked_version = version_;
    if (goals_[gn].state != NodeState::Success || !opts_.leads_to) return;
    auto acc = opts_.leads_to(*this, gn, sp->descriptor.action);
    sp = &supports_[support];
    sp->checked_version = version_;
    if (!acc) return;
    if (!sp->accepted) {
        sp->accepted = true;
        sp->certificate = acc->certificate;
        sp->accepted_score = acc->score;
        ++version_;
        auto pending = std::move(sp->pending);
        sp->pending.clear();
        for (const auto &p : pending) {
            double child_score = 1.0;
            for (std::size_t i = 0; i < p.child_solutions.size(); ++i)
                child_score *= goals_[supports_[support].children[i]].solutions[p.child_solutions[i]].score;
            produce(support, p.binding, p.child_solutions, child_score, p.factor, p.metadata);
        }
    } else if (sp->certificate != acc->certificate) {
        sp->certificate = acc->certificate;
        sp->accepted_score = acc->score;
        for (auto &sol : goals_[sp->parent].solutions)
            for (auto &j : sol.justifications)
                if (j.support == support) j.certificate = acc->certificate;
        ++version_;
    }
    supports_[support].checked_version = version_;
}

bool ProofGraph::run_deferred_checks() {
    const auto before = version_;
    for (std::size_t s = 0; s < supports_.size(); ++s) {
        const auto &sp = supports_[s];
        if (sp.descriptor.kind != SupportKind::AgentfulLeadsTo) continue;
        if (goals_[sp.children[1]].state != NodeState::Success) continue;
        if (sp.checked_version == version_) continue;
        try_accept(static_cast<int>(s));
    }
    return version_ != before;
}

void ProofGraph::produce(int support, const Bindings &beta, const std::vector<int> &child_solutions,
                         double child_score, double factor,
                         const std::map<std::string, std::string> &metadata) {
    const SupportNode &sp = supports_[support];
    const SupportDescriptor &d = sp.descriptor;
    const int parent = sp.parent;
    if (d.kind == SupportKind::AgentfulLeadsTo && !sp.accepted) {
        supports_[support].pending.push_back({beta, child_solutions, factor, metadata});
        return;
    }
    const Bindings none;
    const Bindings &u = d.unification ? d.unification->substitution.vars : none;
    const auto parent_vars = vars_of(goals_[parent].atom);

    Bindings binding;
    std::optional<Atom> inference;
    switch (d.kind) {
    case SupportKind::ConjunctionJoin:
        for (const auto &x : parent_vars) {
            auto it = beta.find(x);
            if (it == beta.end()) return;
            binding[x] = it->second;
        }
        break;
    case SupportKind::Fact:
    case SupportKind::Inference:
        for (const auto &x : parent_vars) binding[x] = substitute(Term::variable(x), u);
        break;
    case SupportKind::Rule:
    case SupportKind::AgentfulLeadsTo: {
        const Rule &r = *d.rule;
        auto resolve = [&](const Term &t) { return substitute(substitute(t, u), beta); };
        Bindings sk;
        if (!r.existentials.empty()) {
            std::vector<Term> universal;
            for (const auto &v : vars_of(r.head)) {
                if (r.existentials.count(v)) continue;
                Term val = resolve(Term::variable(v));
                if (!val.is_ground()) return;
                universal.push_back(std::move(val));
            }
            for (const auto &e : r.existentials) {
                Term val = resolve(Term::variable(e));
                if (!val.is_var()) continue;
                const std::string f = std::string(kSkolemPrefix) + r.id + "$" + original_var_name(e);
                sk[val.name] = universal.empty() ? Term::constant(f) : Term::compound(f, universal);
            }
        }
        for (const auto &x : parent_vars) binding[x] = substitute(resolve(Term::variable(x)), sk);
        if (!r.existentials.empty()) inference = substitute(substitute(substitute(r.head, u), beta), sk);
        break;
    }
    case SupportKind::AgentfulPhase1:
        return;
    }
    for (const auto &[x, t] : binding)
        if (!t.is_ground()) return;
    if (max_depth(binding) > opts_.max_term_depth) return;
    if (inference && !inference->is_ground()) inference.reset();

    Justification j;
    j.support = support;
    j.child_solutions = child_solutions;
    j.factor = factor;
    j.metadata = metadata;
    double score = d.confidence * factor * child_score;
    if (d.kind == SupportKind::AgentfulLeadsTo) {
        j.certificate = sp.certificate;
        score = d.confidence * sp.accepted_score * goals_[sp.children[0]].solutions[child_solutions[0]].score;
    }
    if (supports_[support].state == NodeState::Unknown) supports_[support].state = NodeState::Success;
    add_solution(parent, std::move(binding), score, j);

    if (inference) {
        int depth = 0;
        for (const auto &t : inference->args) depth = std::max(depth, t.depth());
        if (depth > opts_.max_term_depth) return;
        const int dn = intern_goal(*inference, true);
        int mirror;
        if (auto it = mirrors_.find({dn, support}); it != mirrors_.end()) {
            mirror = it->second;
        } else {
            SupportNode m = supports_[support];
            m.id = static_cast<int>(supports_.size());
            m.parent = dn;
            m.mirror_of = support;
            m.state = NodeState::Success;
            m.entries.assign(m.children.size(), {});
            m.pending.clear();
            supports_.push_back(std::move(m));
            mirror = supports_.back().id;
            goals_[dn].supports.push_back(mirror);
            for (std::size_t i = 0; i < supports_[mirror].children.size(); ++i)
                goals_[supports_[mirror].children[i]].parents.emplace_back(mirror, static_cast<int>(i));
            mirrors_[{dn, support}] = mirror;
        }
        Justification mj = j;
        mj.support = mirror;
        add_solution(dn, {}, score, std::move(mj));
    }
}

bool ProofGraph::add_solution(int goal, Bindings binding, double score, Justification j) {
    GoalNode &g = goals_[goal];
    if (g.state == NodeState::Failure) return false;
    const int idx = g.find_solution(binding);
    if (idx < 0) {
        GoalSolution s;
        s.binding = std::move(binding);
        s.score = score;
        s.justifications.push_back(std::move(j));
        g.solutions.push_back(std::move(s));
        g.state = NodeState::Success;
        ++version_;
        enqueue(goal);
        return true;
    }
    auto &sol = g.solutions[idx];
    for (const auto &existing : sol.justifications)
        if (existing.support == j.support && existing.child_solutions == j.child_solutions) return false;
    sol.score = std::max(sol.score, score);
    sol.justifications.push_back(std::move(j));
    ++version_;
    return false;
}

void ProofGraph::fail_support(int support) {
    auto &sp = supports_[support];
    if (sp.state != NodeState::Unknown || sp.descriptor.kind == SupportKind::Fact) return;
    sp.state = NodeState::Failure;
    ++version_;
    check_failure(sp.parent);
}

void ProofGraph::check_failure(int goal) {
    GoalNode &g = goals_[goal];
    if (g.state != NodeState::Unknown || !g.expanded || g.in_flight || !g.solutions.empty()) return;
    for (int s : g.supports)
        if (supports_[s].state != NodeState::Failure) return;
    g.state = NodeState::Failure;
    ++version_;
    enqueue(goal);
}

std::vector<PropagationEvent> ProofGraph::propagate() {
    while (!queue_.empty()) {
        const int g = queue_.front();
        queue_.pop_front();
        queued_.erase(g);

        PropagationEvent ev;
        ev.trigger = g;
        ev.state = goals_[g].state;
        auto &seen = reported_[g];
        for (std::size_t i = seen; i < goals_[g].solutions.size(); ++i) ev.new_results.push_back(static_cast<int>(i));
        seen = goals_[g].solutions.size();
        const bool newly_failed = goals_[g].state == NodeState::Failure && failure_reported_.insert(g).second;
        if (!ev.new_results.empty() || newly_failed) events_.push_back(ev);

        const auto parents = goals_[g].parents;
        for (const auto &[s, pos] : parents) {
            if (goals_[g].state == NodeState::Failure)
                fail_support(s);
            else
                deliver(s, static_cast<std::size_t>(pos));
        }
    }
    return std::exchange(events_, {});
}

// ---------------------------------------------------------------------------
// Selection

namespace {

int complexity(const Atom &a) {
    const auto parts = conjuncts_of(a);
    int depth = 0;
    for (const auto &p : parts)
        for (const auto &t : p.args) depth = std::max(depth, t.depth());
    return static_cast<int>(parts.size()) + depth;
}

} // namespace

namespace {

struct Reach {
    std::vector<double> c;
    std::vector<int> d;
};

Reach reach(const std::vector<GoalNode> &goals, const std::vector<SupportNode> &supports, int root) {
    Reach r{std::vector<double>(goals.size(), -1.0), std::vector<int>(goals.size(), -1)};
    if (root < 0) return r;
    r.c[root] = 1.0;
    std::priority_queue<std::pair<double, int>> pq;
    pq.push({1.0, root});
    while (!pq.empty()) {
        auto [c, g] = pq.top();
        pq.pop();
        if (c < r.c[g]) continue;
        for (int s : goals[g].supports) {
            const double next = c * supports[s].descriptor.confidence;
            for (int ch : supports[s].children) {
                if (next > r.c[ch]) {
                    r.c[ch] = next;
                    pq.push({next, ch});
                }
            }
        }
    }
    r.d[root] = 0;
    std::deque<int> q{root};
    while (!q.empty()) {
        const int g = q.front();
        q.pop_front();
        for (int s : goals[g].supports)
            for (int ch : supports[s].children)
                if (r.d[ch] < 0) {
                    r.d[ch] = r.d[g] + 1;
                    q.push_back(ch);
                }
    }
    return r;
}

Priority score(const GoalNode &g, const Reach &r, const SelectionWeights &w) {
    Priority p;
    p.c = r.c[g.id];
    p.d = r.d[g.id];
    p.x = complexity(g.atom);
    p.p = w.plausibility ? w.plausibility(to_string(g.atom)) : 1.0;
    p.value = w.conf * p.c - w.dist * p.d - w.cplx * p.x + w.plaus * p.p;
    return p;
}

} // namespace

std::optional<Priority> ProofGraph::priority_score(int goal, const SelectionWeights &w) const {
    const Reach r = reach(goals_, supports_, root_);
    if (r.c.at(goal) < 0) return std::nullopt;
    return score(goals_[goal], r, w);
}

std::optional<std::pair<int, Priority>> ProofGraph::next_subgoal(const SelectionWeights &w,
                                                                 int max_depth) const {
    const Reach r = reach(goals_, supports_, root_);
    std::optional<std::pair<int, Priority>> best;
    for (const auto &g : goals_) {
        if (g.state != NodeState::Unknown || g.expanded || g.in_flight) continue;
        if (r.c[g.id] < 0 || r.d[g.id] > max_depth) continue;
        Priority p = score(g, r, w);
        if (!best || p.value > best->second.value ||
            (p.value == best->second.value && g.key < goals_[best->first].key))
            best = {{g.id, p}};
    }
    return best;
}

double ProofGraph::justification_confidence(const Justification &j) const {
    return supports_.at(j.support).descriptor.confidence * j.factor;
}

Atom ProofGraph::instantiate(int goal, int solution) const {
    return substitute(goals_.at(goal).atom, goals_.at(goal).solutions.at(solution).binding);
}

std::string ProofGraph::snapshot_json() const {
    using nlohmann::json;
    json nodes = json::array();
    json edges = json::array();
    for (const auto &g : goals_) {
        json sols = json::array();
        for (const auto &s : g.solutions) {
            json b = json::object();
            for (const auto &[v, t] : s.binding) b["?" + v] = to_string(t);
            sols.push_back({{"binding", b}, {"score", s.score}, {"justifications", s.justifications.size()}});
        }
        nodes.push_back({{"id", "g" + std::to_string(g.id)},
                         {"type", "goal"},
                         {"atom", to_string(g.atom)},
                         {"key", g.key},
                         {"state", to_string(g.state)},
                         {"expanded", g.expanded},
                         {"derived", g.derived},
                         {"solutions", sols}});
    }
    for (const auto &s : supports_) {
        json n = {{"id", "s" + std::to_string(s.id)},
                  {"type", "support"},
                  {"kind", to_string(s.descriptor.kind)},
                  {"prover", s.descriptor.prover},
                  {"confidence", s.descriptor.confidence},
                  {"state", to_string(s.state)}};
        if (s.descriptor.rule) {
            n["rule"] = s.descriptor.rule->id;
            n["provenance"] = s.descriptor.rule->provenance;
        }
        if (s.descriptor.fact) n["fact"] = to_string(s.descriptor.fact->atom);
        nodes.push_back(n);
        edges.push_back({{"from", "g" + std::to_string(s.parent)}, {"to", "s" + std::to_string(s.id)}, {"map", json::object()}});
        for (std::size_t i = 0; i < s.children.size(); ++i) {
            json m = json::object();
            for (const auto &[a, b] : s.child_maps[i]) m["?" + a] = "?" + b;
            edges.push_back({{"from", "s" + std::to_string(s.id)}, {"to", "g" + std::to_string(s.children[i])}, {"map", m}});
        }
    }
    return json{{"nodes", nodes}, {"edges", edges}}.dump();
}

} // namespace bc
