#include "bc/drg.hpp"

#include "bc/unify.hpp"

#include <algorithm>
#include <deque>

namespace bc {

bool TypeTaxonomy::add_edge(const std::string &child, const std::string &parent) {
    if (child == parent || isa(parent, child)) return false;
    parents_[child].insert(parent);
    edges_.insert({child, parent});
    return true;
}

bool TypeTaxonomy::isa(const std::string &x, const std::string &type) const {
    if (x == type) return true;
    std::set<std::string> seen{x};
    std::deque<std::string> work{x};
    while (!work.empty()) {
        auto cur = work.front();
        work.pop_front();
        auto it = parents_.find(cur);
        if (it == parents_.end()) continue;
        for (const auto &p : it->second) {
            if (p == type) return true;
            if (seen.insert(p).second) work.push_back(p);
        }
    }
    return false;
}

bool TypeTaxonomy::known(const std::string &x) const {
    if (parents_.count(x)) return true;
    return std::any_of(edges_.begin(), edges_.end(), [&](const auto &e) { return e.second == x; });
}

TemplateGenerator::TemplateGenerator(std::vector<RuleTemplate> templates, TypeTaxonomy taxonomy,
                                     TemplateGeneratorConfig cfg)
    : templates_(std::move(templates)), taxonomy_(std::move(taxonomy)), cfg_(std::move(cfg)) {}

namespace {

std::vector<std::string> rule_vars(const Rule &r) {
    std::vector<std::string> vars = vars_of(r.head);
    for (const auto &b : r.body)
        for (const auto &t : b.args) collect_vars(t, vars);
    return vars;
}

} // namespace

TemplateGenerator::Output TemplateGenerator::generate_with_warnings(const Atom &goal,
                                                                   const KnowledgeBase &kb) const {
    Output out;
    std::map<std::string, std::size_t> seen; // rule text -> index in out.rules

    for (const auto &tpl : templates_) {
        // The goal's variables are renamed out of the way of template variables.
        FreshCounter fc(0);
        std::map<std::string, std::string> ren;
        Rule pattern = standardize_apart(tpl.pattern, fc, &ren);
        auto head_ur = syntactic_unify(pattern.head, goal);
        if (!head_ur) continue;
        const Bindings &hb = head_ur->substitution.vars;

        for (const auto &[v, type] : tpl.type_constraints)
            if (!taxonomy_.known(type))
                out.warnings.push_back("template " + tpl.id + ": unknown type '" + type + "'");

        std::vector<std::string> tvars = rule_vars(tpl.pattern);
        std::vector<std::string> free;
        Bindings fixed;
        for (const auto &v : tvars) {
            Term val = substitute(Term::variable(ren.at(v)), hb);
            if (val.is_ground())
                fixed[v] = val;
            else
                free.push_back(v);
        }

        std::vector<std::vector<std::string>> domains;
        for (const auto &v : free) {
            std::vector<std::string> dom;
            auto tc = tpl.type_constraints.find(v);
            for (const auto &c : kb.constants()) {
                if (tc != tpl.type_constraints.end() && taxonomy_.known(c) &&
                    !taxonomy_.isa(c, tc->second))
                    continue;
                dom.push_back(c);
            }
            domains.push_back(std::move(dom));
        }

        std::size_t produced = 0;
        std::vector<std::size_t> idx(free.size(), 0);
        bool exhausted = std::any_of(domains.begin(), domains.end(),
                                     [](const auto &d) { return d.empty(); });
        while (!exhausted) {
            if (produced >= cfg_.max_groundings) {
                out.warnings.push_back("template " + tpl.id + ": groundings truncated at " +
                                       std::to_string(cfg_.max_groundings));
                break;
            }
            ++produced;
            Bindings g = fixed;
            for (std::size_t i = 0; i < free.size(); ++i)
                g[free[i]] = Term::constant(domains[i][idx[i]]);

            // advance the odometer
            exhausted = true;
            for (std::size_t i = free.size(); i-- > 0;) {
                if (++idx[i] < domains[i].size()) {
                    exhausted = false;
                    break;
                }
                idx[i] = 0;
            }

            auto value_of = [&](const std::string &v) -> std::string {
                auto it = g.find(v);
                return it == g.end() ? std::string{} : to_string(it->second);
            };

            double type_fit = 1.0;
            bool ok = true;
            for (const auto &[v, type] : tpl.type_constraints) {
                const auto val = value_of(v);
                if (val.empty()) continue;
                if (!taxonomy_.known(val)) {
                    type_fit *= 0.9;
                } else if (!taxonomy_.isa(val, type)) {
                    ok = false;
                    break;
                }
            }
            if (!ok) continue;
            bool suppressed = false;
            for (const auto &neg : tpl.negative_bindings) {
                bool all = !neg.empty();
                for (const auto &[v, type] : neg) {
                    const auto val = value_of(v);
                    if (val.empty() || !taxonomy_.isa(val, type)) {
                        all = false;
                        break;
                    }
                }
                if (all) {
                    suppressed = true;
                    break;
                }
            }
            if (suppressed) continue;

            Rule r;
            r.id = tpl.id;
            r.head = substitute(tpl.pattern.head, g);
            for (const auto &b : tpl.pattern.body) r.body.push_back(substitute(b, g));
            r.tags = tpl.tags;
            r.provenance = "drg:template";
            double score = tpl.base_confidence * type_fit;
            if (cfg_.plausibility) score *= cfg_.plausibility(r);
            r.confidence = score;
            r.refresh_existentials();
            if (!syntactic_unify(r.head, goal)) continue;

            const auto key = to_string(r);
            auto it = seen.find(key);
            if (it == seen.end()) {
                seen[key] = out.rules.size();
                out.rules.push_back({std::move(r), score});
            } else if (score > out.rules[it->second].score) {
                out.rules[it->second] = {std::move(r), score};
            }
        }
    }
    return out;
}

CannedGenerator::CannedGenerator(std::vector<Rule> rules) : rules_(std::move(rules)) {
    for (std::size_t i = 0; i < rules_.size(); ++i) {
        rules_[i].provenance = "drg:canned";
        rules_[i].refresh_existentials();
        index_[{rules_[i].head.predicate, rules_[i].head.arity()}].push_back(i);
    }
}

std::vector<GeneratedRule> CannedGenerator::generate(const Atom &goal, const KnowledgeBase &) const {
    std::vector<GeneratedRule> out;
    auto it = index_.find({goal.predicate, goal.arity()});
    if (it == index_.end()) return out;
    for (auto i : it->second) {
        FreshCounter fc(0);
        Rule fresh = standardize_apart(rules_[i], fc);
        if (syntactic_unify(fresh.head, goal)) out.push_back({rules_[i], rules_[i].confidence});
    }
    return out;
}

} // namespace bc
