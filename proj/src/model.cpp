#include "bc/model.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cstdio>
#include <functional>

namespace bc {

bool Term::is_ground() const {
    if (kind == Kind::Variable) return false;
    return std::all_of(args.begin(), args.end(), [](const Term &a) { return a.is_ground(); });
}

bool Term::is_skolem() const {
    return kind != Kind::Variable && name.rfind(kSkolemPrefix, 0) == 0;
}

int Term::depth() const {
    if (kind != Kind::Compound) return 0;
    int d = 0;
    for (const auto &a : args) d = std::max(d, a.depth());
    return d + 1;
}

bool Atom::is_ground() const {
    return std::all_of(args.begin(), args.end(), [](const Term &a) { return a.is_ground(); });
}

Atom make_conjunction(const std::vector<Atom> &conjuncts) {
    if (conjuncts.size() == 1) return conjuncts.front();
    Atom a{kConjunction, {}};
    for (const auto &c : conjuncts) a.args.push_back(Term::compound(c.predicate, c.args));
    return a;
}

std::vector<Atom> conjuncts_of(const Atom &a) {
    if (!a.is_conjunction()) return {a};
    std::vector<Atom> out;
    for (const auto &t : a.args) {
        if (t.is_compound())
            out.push_back(Atom{t.name, t.args});
        else
            out.push_back(Atom{t.name, {}});
    }
    return out;
}

void Rule::refresh_existentials() {
    std::vector<std::string> body_vars;
    for (const auto &b : body)
        for (const auto &t : b.args) collect_vars(t, body_vars);
    existentials.clear();
    for (const auto &v : vars_of(head))
        if (std::find(body_vars.begin(), body_vars.end(), v) == body_vars.end())
            existentials.insert(v);
}

// ---------------------------------------------------------------------------
// Substitution

namespace {

std::string rename_symbol(const std::string &s, const SymbolMap &m) {
    auto it = m.find(s);
    return it == m.end() ? s : it->second;
}

Term apply_impl(const Term &t, const Bindings &b, const SymbolMap *sym, int guard) {
    if (guard > 10000) throw EngineError("cyclic substitution");
    switch (t.kind) {
    case Term::Kind::Variable: {
        auto it = b.find(t.name);
        if (it == b.end()) return t;
        if (it->second.is_var() && it->second.name == t.name) return t;
        return apply_impl(it->second, b, sym, guard + 1);
    }
    case Term::Kind::Constant:
        return sym ? Term::constant(rename_symbol(t.name, *sym)) : t;
    case Term::Kind::Compound: {
        Term out = Term::compound(sym ? rename_symbol(t.name, *sym) : t.name, {});
        out.args.reserve(t.args.size());
        for (const auto &a : t.args) out.args.push_back(apply_impl(a, b, sym, guard + 1));
        return out;
    }
    }
    return t;
}

bool occurs(const std::string &v, const Term &t) {
    if (t.is_var()) return t.name == v;
    return std::any_of(t.args.begin(), t.args.end(), [&](const Term &a) { return occurs(v, a); });
}

} // namespace

Term rename_vars(const Term &t, const std::map<std::string, std::string> &names) {
    if (t.is_var()) {
        auto it = names.find(t.name);
        return it == names.end() ? t : Term::variable(it->second);
    }
    Term out = t;
    for (auto &a : out.args) a = rename_vars(a, names);
    return out;
}

Atom rename_vars(const Atom &a, const std::map<std::string, std::string> &names) {
    Atom out{a.predicate, {}};
    out.args.reserve(a.args.size());
    for (const auto &t : a.args) out.args.push_back(rename_vars(t, names));
    return out;
}

Term substitute(const Term &t, const Bindings &b) { return apply_impl(t, b, nullptr, 0); }

Term substitute(const Term &t, const Substitution &s) { return apply_impl(t, s.vars, &s.symbols, 0); }

Atom substitute(const Atom &a, const Bindings &b) {
    Atom out{a.predicate, {}};
    out.args.reserve(a.args.size());
    for (const auto &t : a.args) out.args.push_back(substitute(t, b));
    return out;
}

Atom substitute(const Atom &a, const Substitution &s) {
    Atom out{rename_symbol(a.predicate, s.symbols), {}};
    out.args.reserve(a.args.size());
    for (const auto &t : a.args) out.args.push_back(substitute(t, s));
    return out;
}

bool unify_terms(const Term &x, const Term &y, Bindings &b) {
    Term a = substitute(x, b);
    Term c = substitute(y, b);
    if (a == c) return true;
    auto bind = [&b](const std::string &v, const Term &t) {
        if (occurs(v, t)) return false;
        Bindings single{{v, t}};
        for (auto &[k, val] : b) val = substitute(val, single);
        b[v] = t;
        return true;
    };
    if (a.is_var()) return bind(a.name, c);
    if (c.is_var()) return bind(c.name, a);
    if (a.kind != c.kind || a.name != c.name || a.args.size() != c.args.size()) return false;
    for (std::size_t i = 0; i < a.args.size(); ++i)
        if (!unify_terms(a.args[i], c.args[i], b)) return false;
    return true;
}

std::optional<Substitution> compose(const Substitution &s1, const Substitution &s2) {
    Substitution out;
    for (const auto &[v, t] : s1.vars) out.vars[v] = substitute(t, s2.vars);
    for (const auto &[v, t] : s2.vars) {
        auto it = out.vars.find(v);
        if (it == out.vars.end()) {
            if (!unify_terms(Term::variable(v), t, out.vars)) return std::nullopt;
        } else if (!unify_terms(it->second, t, out.vars)) {
            return std::nullopt;
        }
    }
    // Drop trivial self-bindings.
    for (auto it = out.vars.begin(); it != out.vars.end();) {
        if (it->second.is_var() && it->second.name == it->first)
            it = out.vars.erase(it);
        else
            ++it;
    }
    out.symbols = s1.symbols;
    for (const auto &[k, v] : s2.symbols) {
        auto it = out.symbols.find(k);
        if (it != out.symbols.end() && it->second != v) return std::nullopt;
        out.symbols[k] = v;
    }
    // Collapse chains a->b, b->c into a->c.
    for (auto &[k, v] : out.symbols) {
        std::set<std::string> seen{k};
        while (true) {
            auto next = out.symbols.find(v);
            if (next == out.symbols.end() || seen.count(v)) break;
            seen.insert(v);
            v = next->second;
        }
    }
    for (auto it = out.symbols.begin(); it != out.symbols.end();) {
        if (it->first == it->second)
            it = out.symbols.erase(it);
        else
            ++it;
    }
    return out;
}

void collect_vars(const Term &t, std::vector<std::string> &out) {
    if (t.is_var()) {
        if (std::find(out.begin(), out.end(), t.name) == out.end()) out.push_back(t.name);
        return;
    }
    for (const auto &a : t.args) collect_vars(a, out);
}

std::vector<std::string> vars_of(const Atom &a) {
    std::vector<std::string> out;
    for (const auto &t : a.args) collect_vars(t, out);
    return out;
}

bool mentions_symbol(const Term &t, const std::string &sym) {
    if (!t.is_var() && t.name == sym) return true;
    return std::any_of(t.args.begin(), t.args.end(),
                       [&](const Term &a) { return mentions_symbol(a, sym); });
}

bool mentions_symbol(const Atom &a, const std::string &sym) {
    return std::any_of(a.args.begin(), a.args.end(),
                       [&](const Term &t) { return mentions_symbol(t, sym); });
}

Rule standardize_apart(const Rule &r, FreshCounter &counter,
                       std::map<std::string, std::string> *renaming) {
    std::vector<std::string> vars = vars_of(r.head);
    for (const auto &b : r.body)
        for (const auto &t : b.args) collect_vars(t, vars);
    if (vars.empty()) {
        if (renaming) renaming->clear();
        return r;
    }
    const auto n = counter.next();
    std::map<std::string, std::string> names;
    for (const auto &v : vars) names[v] = v + "_" + std::to_string(n);
    Rule out = r;
    out.head = rename_vars(r.head, names);
    for (auto &b : out.body) b = rename_vars(b, names);
    out.existentials.clear();
    for (const auto &e : r.existentials) out.existentials.insert(names[e]);
    if (renaming) *renaming = std::move(names);
    return out;
}

// ---------------------------------------------------------------------------
// Rendering

namespace {

void render(const Term &t, std::string &out, bool compact) {
    switch (t.kind) {
    case Term::Kind::Variable:
        out += '?';
        out += t.name;
        return;
    case Term::Kind::Constant:
        out += t.name;
        return;
    case Term::Kind::Compound:
        out += t.name;
        out += '(';
        for (std::size_t i = 0; i < t.args.size(); ++i) {
            if (i) out += compact ? "," : ", ";
            render(t.args[i], out, compact);
        }
        out += ')';
        return;
    }
}

} // namespace

std::string to_string(const Term &t) {
    std::string out;
    render(t, out, false);
    return out;
}

std::string to_string(const Atom &a) {
    if (a.is_conjunction()) {
        std::string out;
        auto parts = conjuncts_of(a);
        for (std::size_t i = 0; i < parts.size(); ++i) {
            if (i) out += ", ";
            out += to_string(parts[i]);
        }
        return out;
    }
    std::string out = a.predicate;
    if (a.args.empty()) return out;
    out += '(';
    for (std::size_t i = 0; i < a.args.size(); ++i) {
        if (i) out += ", ";
        render(a.args[i], out, false);
    }
    out += ')';
    return out;
}

std::string to_string(const Rule &r) {
    std::string out = to_string(r.head);
    if (r.body.empty()) return out;
    out += " :- ";
    for (std::size_t i = 0; i < r.body.size(); ++i) {
        if (i) out += ", ";
        out += to_string(r.body[i]);
    }
    return out;
}

Atom canonicalize(const Atom &a, std::map<std::string, std::string> *renaming) {
    std::map<std::string, std::string> names;
    std::size_t i = 0;
    for (const auto &v : vars_of(a)) names[v] = "_" + std::to_string(i++);
    Atom out = rename_vars(a, names);
    if (renaming) *renaming = std::move(names);
    return out;
}

std::string canonical_key(const Atom &a) {
    Atom c = canonicalize(a);
    std::string out = c.predicate + "/" + std::to_string(c.args.size());
    if (c.args.empty()) return out;
    out += '(';
    for (std::size_t i = 0; i < c.args.size(); ++i) {
        if (i) out += ',';
        render(c.args[i], out, true);
    }
    out += ')';
    return out;
}

std::string original_var_name(const std::string &v) {
    auto pos = v.rfind('_');
    if (pos == std::string::npos || pos == 0 || pos + 1 == v.size()) return v;
    for (std::size_t i = pos + 1; i < v.size(); ++i)
        if (v[i] < '0' || v[i] > '9') return v;
    return v.substr(0, pos);
}

Atom skolemize_head(const Rule &r, const Bindings &binding) {
    std::vector<Term> universal_values;
    for (const auto &v : vars_of(r.head)) {
        if (r.existentials.count(v)) continue;
        auto it = binding.find(v);
        if (it == binding.end()) throw EngineError("skolemize: unbound universal variable ?" + v);
        Term val = substitute(it->second, binding);
        if (!val.is_ground()) throw EngineError("skolemize: non-ground value for ?" + v);
        universal_values.push_back(std::move(val));
    }
    Bindings full = binding;
    for (const auto &e : r.existentials) {
        auto fn = std::string(kSkolemPrefix) + r.id + "$" + original_var_name(e);
        full[e] = universal_values.empty() ? Term::constant(fn) : Term::compound(fn, universal_values);
    }
    Atom out = substitute(r.head, full);
    if (!out.is_ground()) throw EngineError("skolemize: head not ground: " + to_string(out));
    return out;
}

// ---------------------------------------------------------------------------
// KnowledgeBase

namespace {

void collect_constants(const Term &t, std::set<std::string> &out) {
    if (t.is_const()) out.insert(t.name);
    for (const auto &a : t.args) collect_constants(a, out);
}

void collect_constants(const Atom &a, std::set<std::string> &out) {
    for (const auto &t : a.args) collect_constants(t, out);
}

} // namespace

void KnowledgeBase::add_fact(Fact f) {
    if (!f.atom.is_ground()) throw EngineError("fact is not ground: " + to_string(f.atom));
    const auto idx = facts_.size();
    fact_index_[{f.atom.predicate, f.atom.arity()}].push_back(idx);
    if (f.atom.arity() == 2) role_index_[to_string(f.atom.args[0])].push_back(idx);
    collect_constants(f.atom, constants_);
    facts_.push_back(std::move(f));
}

void KnowledgeBase::add_rule(Rule r) {
    r.refresh_existentials();
    const auto idx = rules_.size();
    rule_index_[{r.head.predicate, r.head.arity()}].push_back(idx);
    collect_constants(r.head, constants_);
    for (const auto &b : r.body) collect_constants(b, constants_);
    rules_.push_back(std::move(r));
}

std::vector<const Fact *> KnowledgeBase::facts_for(const std::string &pred, std::size_t arity) const {
    std::vector<const Fact *> out;
    auto it = fact_index_.find({pred, arity});
    if (it != fact_index_.end())
        for (auto i : it->second) out.push_back(&facts_[i]);
    return out;
}

std::vector<const Rule *> KnowledgeBase::rules_for(const std::string &pred, std::size_t arity) const {
    std::vector<const Rule *> out;
    auto it = rule_index_.find({pred, arity});
    if (it != rule_index_.end())
        for (auto i : it->second) out.push_back(&rules_[i]);
    return out;
}

const Rule *KnowledgeBase::rule_by_id(const std::string &id) const {
    for (const auto &r : rules_)
        if (r.id == id) return &r;
    return nullptr;
}

std::vector<const Fact *> KnowledgeBase::role_facts(const Term &t) const {
    std::vector<const Fact *> out;
    auto it = role_index_.find(to_string(t));
    if (it != role_index_.end())
        for (auto i : it->second) out.push_back(&facts_[i]);
    return out;
}

std::string KnowledgeBase::content_hash() const {
    std::vector<std::string> items;
    items.reserve(facts_.size() + rules_.size());
    for (const auto &f : facts_) items.push_back("F " + format_real(f.confidence) + " " + to_string(f.atom));
    for (const auto &r : rules_) {
        std::string s = "R " + r.id + " " + format_real(r.confidence) + " [";
        for (const auto &t : r.tags) s += t + ",";
        s += "] " + r.provenance + " " + to_string(r);
        items.push_back(std::move(s));
    }
    std::sort(items.begin(), items.end());
    std::string all;
    for (const auto &s : items) {
        all += s;
        all += '\n';
    }
    return fnv1a_hex(all);
}

std::string format_real(double v) {
    std::array<char, 64> buf{};
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    if (ec != std::errc{}) return std::to_string(v);
    return std::string(buf.data(), end);
}

std::string fnv1a_hex(const std::string &data) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace bc
