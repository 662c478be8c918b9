#include "bc/extract.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <numeric>

namespace bc {

int IlpModel::add_goal(double coef, std::string label) {
    Var v;
    v.kind = Var::Kind::Goal;
    v.coef = coef;
    v.label = std::move(label);
    vars.push_back(std::move(v));
    return static_cast<int>(vars.size()) - 1;
}

int IlpModel::add_support(int goal, double coef, std::vector<int> children, std::string label) {
    Var v;
    v.kind = Var::Kind::Support;
    v.coef = coef;
    v.next = std::move(children);
    v.parent = goal;
    v.label = std::move(label);
    vars.push_back(std::move(v));
    const int id = static_cast<int>(vars.size()) - 1;
    vars[goal].next.push_back(id);
    return id;
}

IlpModel build_ilp(const ProofGraph &g, int goal, int solution) {
    const GoalNode &target = g.goal(goal);
    if (target.state != NodeState::Success)
        throw EngineError("extraction target " + target.key + " has not succeeded");
    if (solution < 0 || solution >= static_cast<int>(target.solutions.size()))
        throw EngineError("extraction target has no solution " + std::to_string(solution));

    IlpModel m;
    std::map<std::pair<int, int>, int> goal_vars;
    std::map<ChoiceRef, int> support_vars;
    std::deque<std::pair<int, int>> work;
    auto goal_var = [&](int gn, int sn) {
        auto it = goal_vars.find({gn, sn});
        if (it != goal_vars.end()) return it->second;
        const int v = m.add_goal(0.0, to_string(g.instantiate(gn, sn)));
        m.origin.push_back({gn, sn, -1});
        goal_vars[{gn, sn}] = v;
        work.emplace_back(gn, sn);
        return v;
    };
    m.root = goal_var(goal, solution);
    while (!work.empty()) {
        auto [gn, sn] = work.front();
        work.pop_front();
        const int gv = goal_vars.at({gn, sn});
        const auto &sol = g.goal(gn).solutions[sn];
        for (std::size_t ji = 0; ji < sol.justifications.size(); ++ji) {
            const auto &j = sol.justifications[ji];
            const auto &sp = g.support(j.support);
            if (sp.descriptor.kind == SupportKind::AgentfulPhase1) continue;
            const double conf = g.justification_confidence(j);
            if (!(conf > 0.0)) continue;
            std::vector<int> children;
            for (std::size_t i = 0; i < j.child_solutions.size(); ++i)
                children.push_back(goal_var(sp.children[i], j.child_solutions[i]));
            std::string label = to_string(sp.descriptor.kind);
            if (sp.descriptor.rule) label += " " + sp.descriptor.rule->id;
            const int sv = m.add_support(gv, std::min(0.0, std::log(conf)), std::move(children), label);
            const ChoiceRef ref{gn, sn, static_cast<int>(ji)};
            m.origin.push_back(ref);
            support_vars[ref] = sv;
        }
    }
    for (std::size_t v = 0; v < m.vars.size(); ++v) {
        if (m.vars[v].kind != IlpModel::Var::Kind::Support) continue;
        const auto &o = m.origin[v];
        const auto &j = g.goal(o.goal).solutions[o.solution].justifications[o.justification];
        for (const auto &c : j.certificate)
            if (auto it = support_vars.find(c); it != support_vars.end())
                m.vars[v].requires_supports.push_back(it->second);
    }
    return m;
}

namespace {

constexpr double kTie = 1e-12;


class Search {
  public:
    Search(const IlpModel &m, const std::set<std::vector<int>> &nogoods)
        : m_(m), nogoods_(nogoods), choice_(m.vars.size(), -1), included_(m.vars.size(), 0),
          forced_(m.vars.size(), -1), stamp_(m.vars.size(), 0), maxcoef_(m.vars.size(), 0.0) {
        for (std::size_t v = 0; v < m.vars.size(); ++v) {
            if (m.vars[v].kind != IlpModel::Var::Kind::Goal) continue;
            double best = -std::numeric_limits<double>::infinity();
            for (int s : m.vars[v].next) best = std::max(best, m.vars[s].coef);
            maxcoef_[v] = best;
        }
    }

    std::optional<Assignment> run() {
        if (m_.vars.empty()) return std::nullopt;
        included_[m_.root] = 1;
        cur_ = m_.vars[m_.root].coef;
        std::vector<int> pending{m_.root};
        rec(pending);
        return best_;
    }

  private:
    bool reaches(int from, int target) {
        ++epoch_;
        std::vector<int> stack{from};
        while (!stack.empty()) {
            const int v = stack.back();
            stack.pop_back();
            if (v == target) return true;
            if (stamp_[v] == epoch_) continue;
            stamp_[v] = epoch_;
            if (choice_[v] < 0) continue;
            for (int c : m_.vars[choice_[v]].next) stack.push_back(c);
        }
        return false;
    }

    void complete() {
        std::vector<int> inc;
        std::vector<double> coefs;
        for (std::size_t v = 0; v < m_.vars.size(); ++v) {
            const bool in = m_.vars[v].kind == IlpModel::Var::Kind::Goal
                                ? included_[v] != 0
                                : (included_[m_.vars[v].parent] && choice_[m_.vars[v].parent] == static_cast<int>(v));
            if (!in) continue;
            inc.push_back(static_cast<int>(v));
            coefs.push_back(m_.vars[v].coef);
        }
        // summed in value order so the score does not depend on variable numbering
        std::sort(coefs.begin(), coefs.end());
        const double obj = std::accumulate(coefs.begin(), coefs.end(), 0.0);
        for (int v : inc)
            if (m_.vars[v].kind == IlpModel::Var::Kind::Support)
                for (int r : m_.vars[v].requires_supports)
                    if (!included_[m_.vars[r].parent] || choice_[m_.vars[r].parent] != r) return;
        if (nogoods_.count(inc)) return;
        // equal objectives keep the first one found; the search order is fixed
        if (best_ && obj <= best_->objective + kTie) return;
        Assignment a;
        a.included = std::move(inc);
        a.objective = obj;
        for (std::size_t v = 0; v < m_.vars.size(); ++v)
            if (m_.vars[v].kind == IlpModel::Var::Kind::Goal && included_[v]) a.choice[static_cast<int>(v)] = choice_[v];
        best_ = std::move(a);
    }

    void rec(std::vector<int> pending) {
        if (pending.empty()) {
            complete();
            return;
        }
        auto it = std::min_element(pending.begin(), pending.end());
        const int g = *it;
        pending.erase(it);
        double rest = 0.0;
        for (int p : pending) rest += maxcoef_[p];

        std::vector<int> alts;
        if (forced_[g] >= 0)
            alts = {forced_[g]};
        else
            alts = m_.vars[g].next;
        std::stable_sort(alts.begin(), alts.end(), [&](int a, int b) {
            if (m_.vars[a].coef != m_.vars[b].coef) return m_.vars[a].coef > m_.vars[b].coef;
            return a < b;
        });

        for (int s : alts) {
            const auto &sv = m_.vars[s];
            const double bound = cur_ + sv.coef + rest;
            if (best_ && bound <= best_->objective + kTie) break;
            bool ok = true;
            for (int c : sv.next)
                if (c == g || reaches(c, g)) {
                    ok = false;
                    break;
                }
            if (!ok) continue;
            for (int r : sv.requires_supports) {
                const int pg = m_.vars[r].parent;
                if ((choice_[pg] >= 0 && choice_[pg] != r) || (forced_[pg] >= 0 && forced_[pg] != r) ||
                    (pg == g && r != s)) {
                    ok = false;
                    break;
                }
            }
            if (!ok) continue;

            std::vector<int> forced_here;
            for (int r : sv.requires_supports) {
                const int pg = m_.vars[r].parent;
                if (forced_[pg] < 0) {
                    forced_[pg] = r;
                    forced_here.push_back(pg);
                }
            }
            choice_[g] = s;
            const double saved = cur_;
            cur_ += sv.coef;
            std::vector<int> next = pending;
            std::vector<int> added;
            for (int c : sv.next) {
                if (included_[c]) continue;
                included_[c] = 1;
                cur_ += m_.vars[c].coef;
                added.push_back(c);
                next.push_back(c);
            }
            rec(std::move(next));
            for (int c : added) included_[c] = 0;
            cur_ = saved;
            choice_[g] = -1;
            for (int pg : forced_here) forced_[pg] = -1;
        }
    }

    const IlpModel &m_;
    const std::set<std::vector<int>> &nogoods_;
    std::vector<int> choice_;
    std::vector<char> included_;
    std::vector<int> forced_;
    std::vector<std::uint64_t> stamp_;
    std::uint64_t epoch_ = 0;
    std::vector<double> maxcoef_;
    double cur_ = 0.0;
    std::optional<Assignment> best_;
};

} // namespace

std::vector<Assignment> solve_top_k(const IlpModel &m, std::size_t k) {
    std::vector<Assignment> out;
    std::set<std::vector<int>> nogoods;
    while (out.size() < k) {
        auto a = Search(m, nogoods).run();
        if (!a) break;
        nogoods.insert(a->included);
        out.push_back(std::move(*a));
    }
    return out;
}

std::string check_assignment(const IlpModel &m, const Assignment &a) {
    std::vector<char> in(m.vars.size(), 0);
    for (int v : a.included) {
        if (v < 0 || v >= static_cast<int>(m.vars.size())) return "unknown variable";
        in[v] = 1;
    }
    if (!in[m.root]) return "root not included";
    for (std::size_t v = 0; v < m.vars.size(); ++v) {
        if (!in[v]) continue;
        const auto &var = m.vars[v];
        if (var.kind == IlpModel::Var::Kind::Goal) {
            int chosen = 0;
            for (int s : var.next) chosen += in[s];
            if (chosen != 1) return "goal " + std::to_string(v) + " has " + std::to_string(chosen) + " supports";
        } else {
            if (!in[var.parent]) return "support " + std::to_string(v) + " without its goal";
            for (int c : var.next)
                if (!in[c]) return "support " + std::to_string(v) + " misses a child";
            for (int r : var.requires_supports)
                if (!in[r]) return "support " + std::to_string(v) + " misses a required support";
        }
    }
    // acyclic over included nodes
    std::vector<int> color(m.vars.size(), 0);
    std::function<bool(int)> dfs = [&](int v) {
        color[v] = 1;
        for (int w : m.vars[v].next) {
            if (!in[w]) continue;
            if (color[w] == 1) return false;
            if (color[w] == 0 && !dfs(w)) return false;
        }
        color[v] = 2;
        return true;
    };
    if (!dfs(m.root)) return "cycle";
    for (int v : a.included)
        if (color[v] == 0) return "included node unreachable from the root";
    return {};
}

std::vector<ChoiceRef> chosen_justifications(const IlpModel &m, const Assignment &a) {
    std::vector<ChoiceRef> out;
    for (int v : a.included)
        if (m.vars[v].kind == IlpModel::Var::Kind::Support && v < static_cast<int>(m.origin.size()))
            out.push_back(m.origin[v]);
    std::sort(out.begin(), out.end());
    return out;
}

bool ProofTree::mentions(const std::string &symbol) const {
    for (const auto &n : nodes)
        if (n.goal && mentions_symbol(n.instance, symbol)) return true;
    return false;
}

bool ProofTree::uses_tag(const std::string &tag) const {
    for (const auto &n : nodes)
        if (!n.goal && n.kind == "rule" && n.tags.count(tag)) return true;
    return false;
}

ProofTree extract_proof_tree(const ProofGraph &g, const IlpModel &m, const Assignment &a,
                             const Atom &query, const std::map<std::string, std::string> &query_renaming) {
    if (auto err = check_assignment(m, a); !err.empty()) throw EngineError("invalid assignment: " + err);
    ProofTree t;
    t.query = to_string(query);
    t.objective = a.objective;
    t.score = std::exp(a.objective);

    const auto &root = m.origin.at(m.root);
    const auto &binding = g.goal(root.goal).solutions.at(root.solution).binding;
    for (const auto &[orig, canon] : query_renaming)
        if (auto it = binding.find(canon); it != binding.end()) t.bindings["?" + orig] = to_string(it->second);

    std::map<int, int> seen;
    std::set<std::tuple<std::string, std::string, std::string>> fuzzy_seen;
    std::function<int(int)> build = [&](int var) {
        const int idx = static_cast<int>(t.nodes.size());
        t.nodes.emplace_back();
        if (auto it = seen.find(var); it != seen.end()) {
            t.nodes[idx] = t.nodes[it->second];
            t.nodes[idx].children.clear();
            t.nodes[idx].first_seen = it->second;
            return idx;
        }
        seen[var] = idx;
        const auto &o = m.origin.at(var);
        ProofTree::Node n;
        n.var = var;
        if (m.vars[var].kind == IlpModel::Var::Kind::Goal) {
            n.goal = true;
            n.instance = g.instantiate(o.goal, o.solution);
            n.atom = to_string(n.instance);
            t.nodes[idx] = n;
            const int s = a.choice.at(var);
            const int child = build(s);
            t.nodes[idx].children.push_back(child);
            return idx;
        }
        const auto &j = g.goal(o.goal).solutions.at(o.solution).justifications.at(o.justification);
        const auto &sp = g.support(j.support);
        const auto &d = sp.descriptor;
        n.goal = false;
        n.kind = to_string(d.kind);
        n.prover = d.prover;
        n.confidence = g.justification_confidence(j);
        if (d.rule) {
            n.rule_id = d.rule->id;
            n.provenance = d.rule->provenance;
            n.tags = d.rule->tags;
        }
        const std::string head = to_string(g.instantiate(o.goal, o.solution));
        switch (d.kind) {
        case SupportKind::Fact:
            n.text = to_string(d.fact->atom);
            n.provenance = d.fact->provenance;
            break;
        case SupportKind::Inference:
            n.text = to_string(d.fact->atom);
            n.provenance = "derived";
            break;
        default: {
            std::string body;
            for (std::size_t i = 0; i < sp.children.size(); ++i) {
                if (i) body += ", ";
                Atom a = g.instantiate(sp.children[i], j.child_solutions[i]);
                // the second child stands for leadsTo(action, goal)
                if (d.kind == SupportKind::AgentfulLeadsTo && i == 1)
                    a = Atom{"leadsTo", {Term::constant(d.action), Term::compound(a.predicate, a.args)}};
                body += to_string(a);
            }
            n.text = d.kind == SupportKind::ConjunctionJoin ? body : head + " :- " + body;
        }
        }
        if (d.unification) {
            for (const auto &[a2, b2] : d.unification->substitution.symbols)
                if (fuzzy_seen.insert({a2, b2, "unify"}).second)
                    t.fuzzy.push_back({a2, b2, d.unification->score, "unify"});
        }
        for (const auto &[key, val] : j.metadata) {
            if (key.rfind("merge:", 0) != 0) continue;
            const auto eq = key.find('=');
            const auto x = key.substr(6, eq - 6);
            const auto y = key.substr(eq + 1);
            if (fuzzy_seen.insert({x, y, "merge"}).second) t.fuzzy.push_back({x, y, std::stod(val), "merge"});
        }
        t.nodes[idx] = n;
        for (int c : m.vars[var].next) {
            const int child = build(c);
            t.nodes[idx].children.push_back(child);
        }
        return idx;
    };
    build(m.root);
    return t;
}

namespace {

std::string num(double v) { return fmt::format("{:.6g}", v); }

std::string dot_escape(const std::string &s) {
    std::string out;
    for (char c : s) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
    }
    return out;
}

std::string support_title(const ProofTree::Node &n) {
    if (n.kind == "fact") return "fact";
    if (n.kind == "rule") return n.rule_id;
    if (n.kind == "agentful-leadsTo") return n.rule_id + " (agentful)";
    return n.kind;
}

} // namespace

std::string render_explanation(const ProofTree &t, ExplanationFormat f) {
    if (f == ExplanationFormat::Json) {
        nlohmann::json nodes = nlohmann::json::array();
        for (std::size_t i = 0; i < t.nodes.size(); ++i) {
            const auto &n = t.nodes[i];
            nlohmann::json j = {{"id", i}, {"type", n.goal ? "goal" : "support"}, {"children", n.children}};
            if (n.first_seen >= 0) j["same_as"] = n.first_seen;
            if (n.goal) {
                j["atom"] = n.atom;
            } else {
                j["kind"] = n.kind;
                j["prover"] = n.prover;
                j["confidence"] = n.confidence;
                j["text"] = n.text;
                if (!n.rule_id.empty()) j["rule"] = n.rule_id;
                if (!n.provenance.empty()) j["provenance"] = n.provenance;
                if (!n.tags.empty()) j["tags"] = n.tags;
            }
            nodes.push_back(std::move(j));
        }
        nlohmann::json fuzzy = nlohmann::json::array();
        for (const auto &m : t.fuzzy)
            fuzzy.push_back({{"from", m.from}, {"to", m.to}, {"score", m.score}, {"kind", m.kind}});
        return nlohmann::json{{"query", t.query},
                              {"bindings", t.bindings},
                              {"score", t.score},
                              {"nodes", nodes},
                              {"fuzzy", fuzzy}}
            .dump();
    }

    if (f == ExplanationFormat::Dot) {
        std::string out = "digraph proof {\n  rankdir=TB;\n";
        for (std::size_t i = 0; i < t.nodes.size(); ++i) {
            const auto &n = t.nodes[i];
            if (n.first_seen >= 0) continue;
            const std::string label =
                n.goal ? n.atom : support_title(n) + " " + num(n.confidence) + "\\n" + dot_escape(n.text);
            out += fmt::format("  n{} [shape={},label=\"{}\"];\n", i, n.goal ? "ellipse" : "box",
                               n.goal ? dot_escape(label) : label);
        }
        for (std::size_t i = 0; i < t.nodes.size(); ++i) {
            if (t.nodes[i].first_seen >= 0) continue;
            for (int c : t.nodes[i].children) {
                const int target = t.nodes[c].first_seen >= 0 ? t.nodes[c].first_seen : c;
                out += fmt::format("  n{} -> n{};\n", i, target);
            }
        }
        return out + "}\n";
    }

    std::string out = "Explanation for: " + t.query + "\n";
    if (t.bindings.empty()) {
        out += "Answer: yes\n";
    } else {
        std::string b;
        for (const auto &[v, val] : t.bindings) b += (b.empty() ? "" : ", ") + v + " = " + val;
        out += "Answer: " + b + "\n";
    }
    out += "Score: " + num(t.score) + "\n";

    std::vector<const ProofTree::Node *> rules, facts;
    for (const auto &n : t.nodes) {
        if (n.goal || n.first_seen >= 0) continue;
        if (n.kind == "fact") facts.push_back(&n);
        else if (n.kind == "rule" || n.kind == "agentful-leadsTo") rules.push_back(&n);
    }
    out += "Rules:\n";
    for (std::size_t i = 0; i < rules.size(); ++i) {
        const auto &n = *rules[i];
        out += fmt::format("  {}. {} [{}] ({}{}): {}\n", i + 1, n.rule_id, num(n.confidence), n.provenance,
                           n.kind == "agentful-leadsTo" ? ", agentful" : "", n.text);
    }
    out += "Facts:\n";
    for (std::size_t i = 0; i < facts.size(); ++i)
        out += fmt::format("  {}. {} [{}]\n", i + 1, facts[i]->text, num(facts[i]->confidence));
    if (!t.fuzzy.empty()) {
        out += "Fuzzy unifications:\n";
        for (const auto &m : t.fuzzy)
            out += fmt::format("  {} ~ {} ({}, {})\n", m.from, m.to, num(m.score), m.kind);
    }
    out += "Proof:\n";
    std::function<void(int, int)> walk = [&](int i, int depth) {
        const auto &n = t.nodes[i];
        const std::string pad(2 + 2 * depth, ' ');
        if (n.goal) {
            out += pad + n.atom + (n.first_seen >= 0 ? " (see above)" : "") + "\n";
        } else {
            out += pad + "<- " + support_title(n) + " [" + num(n.confidence) + "]\n";
        }
        for (int c : n.children) walk(c, depth + 1);
    };
    walk(0, 0);
    return out;
}

std::optional<Acceptance> leads_to_check(const ProofGraph &g, int goal, const std::string &action,
                                         std::size_t k) {
    const auto &node = g.goal(goal);
    if (node.state != NodeState::Success) return std::nullopt;
    for (int s = 0; s < static_cast<int>(node.solutions.size()); ++s) {
        const IlpModel m = build_ilp(g, goal, s);
        for (const auto &a : solve_top_k(m, k)) {
            ProofTree t = extract_proof_tree(g, m, a, node.atom, {});
            if (t.mentions(action) && t.uses_tag("causal")) return Acceptance{chosen_justifications(m, a), t.score};
        }
    }
    return std::nullopt;
}

} // namespace bc
