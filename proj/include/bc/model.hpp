#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace bc {

/// Raised for violated preconditions inside the engine (not for bad user input,
/// which is reported through diagnostics).
class EngineError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

inline constexpr const char *kSkolemPrefix = "sk$";
inline constexpr const char *kConjunction = "and$";

struct Term {
    enum class Kind : std::uint8_t { Variable, Constant, Compound };

    Kind kind = Kind::Constant;
    std::string name; // variable name (without '?'), constant symbol or functor
    std::vector<Term> args;

    static Term variable(std::string n) { return {Kind::Variable, std::move(n), {}}; }
    static Term constant(std::string n) { return {Kind::Constant, std::move(n), {}}; }
    static Term compound(std::string f, std::vector<Term> a) {
        return {Kind::Compound, std::move(f), std::move(a)};
    }

    bool is_var() const { return kind == Kind::Variable; }
    bool is_const() const { return kind == Kind::Constant; }
    bool is_compound() const { return kind == Kind::Compound; }
    bool is_ground() const;
    bool is_skolem() const;

    /// Nesting depth of compound structure; constants and variables are 0.
    int depth() const;

    friend bool operator==(const Term &, const Term &) = default;
    friend auto operator<=>(const Term &a, const Term &b) {
        if (auto c = a.kind <=> b.kind; c != 0) return c;
        if (auto c = a.name <=> b.name; c != 0) return c;
        return a.args <=> b.args;
    }
};

struct Atom {
    std::string predicate;
    std::vector<Term> args;

    std::size_t arity() const { return args.size(); }
    bool is_ground() const;
    bool is_conjunction() const { return predicate == kConjunction; }

    friend bool operator==(const Atom &, const Atom &) = default;
    friend auto operator<=>(const Atom &, const Atom &) = default;
};

/// Builds the reified conjunction goal `and$(p(..), q(..))`.
Atom make_conjunction(const std::vector<Atom> &conjuncts);
/// Inverse of make_conjunction; a plain atom yields itself.
std::vector<Atom> conjuncts_of(const Atom &a);

struct Fact {
    Atom atom;
    double confidence = 1.0;
    std::string provenance;

    friend bool operator==(const Fact &a, const Fact &b) {
        return a.atom == b.atom && a.confidence == b.confidence;
    }
};

struct Rule {
    std::string id;
    Atom head;
    std::vector<Atom> body;
    double confidence = 1.0;
    std::set<std::string> tags;
    std::set<std::string> existentials; // head variables absent from the body
    std::string provenance = "static";

    bool has_tag(const std::string &t) const { return tags.count(t) != 0; }
    /// Recomputes `existentials` from head and body.
    void refresh_existentials();

    friend bool operator==(const Rule &a, const Rule &b) {
        return a.id == b.id && a.head == b.head && a.body == b.body &&
               a.confidence == b.confidence && a.tags == b.tags && a.provenance == b.provenance;
    }
};

using Bindings = std::map<std::string, Term>;
using SymbolMap = std::map<std::string, std::string>;

struct Substitution {
    Bindings vars;
    SymbolMap symbols;

    bool empty() const { return vars.empty() && symbols.empty(); }
    friend bool operator==(const Substitution &, const Substitution &) = default;
};

/// Applies bindings recursively (to a fixpoint) and renames symbols keyed in
/// the symbol map.
Term substitute(const Term &t, const Substitution &s);
Atom substitute(const Atom &a, const Substitution &s);
Term substitute(const Term &t, const Bindings &b);
Atom substitute(const Atom &a, const Bindings &b);

/// One-pass variable renaming (no fixpoint, so swaps are safe).
Term rename_vars(const Term &t, const std::map<std::string, std::string> &names);
Atom rename_vars(const Atom &a, const std::map<std::string, std::string> &names);

/// s1 then s2. nullopt when the same variable ends up bound to terms that do
/// not unify, or the symbol maps disagree.
std::optional<Substitution> compose(const Substitution &s1, const Substitution &s2);

/// Most-general unification of two terms with occurs check, extending `b`
/// (kept idempotent). Leaves `b` unspecified on failure.
bool unify_terms(const Term &x, const Term &y, Bindings &b);

/// Variables in order of first occurrence.
void collect_vars(const Term &t, std::vector<std::string> &out);
std::vector<std::string> vars_of(const Atom &a);
bool mentions_symbol(const Term &t, const std::string &sym);
bool mentions_symbol(const Atom &a, const std::string &sym);

/// Monotone source of fresh suffixes for standardize-apart.
class FreshCounter {
  public:
    explicit FreshCounter(std::uint64_t start = 1) : next_(start) {}
    std::uint64_t next() { return next_++; }

  private:
    std::uint64_t next_;
};

/// Renames every rule variable `v` to `v_<n>`. `renaming`, if given, receives
/// the old-name -> new-name map.
Rule standardize_apart(const Rule &r, FreshCounter &counter,
                       std::map<std::string, std::string> *renaming = nullptr);

/// Alpha-canonical rendering: `pred/arity(args)` with variables renamed to
/// ?_0, ?_1 ... in order of first occurrence.
std::string canonical_key(const Atom &a);

/// Renames variables to ?_0, ?_1 ... in order of first occurrence. The map
/// goes from original name to canonical name.
Atom canonicalize(const Atom &a, std::map<std::string, std::string> *renaming = nullptr);

/// Ground head for `r` under `binding` (over r's own variables): existential
/// variables become `sk$<rule id>$<var>(universal head values...)`.
/// Name before standardization: `d_42` -> `d`.
std::string original_var_name(const std::string &v);
Atom skolemize_head(const Rule &r, const Bindings &binding);

std::string to_string(const Term &t);
std::string to_string(const Atom &a);
std::string to_string(const Rule &r);

/// Indexed store of facts and rules. Read-only while a query runs.
class KnowledgeBase {
  public:
    using Key = std::pair<std::string, std::size_t>;

    void add_fact(Fact f);
    void add_rule(Rule r);

    const std::vector<Fact> &facts() const { return facts_; }
    const std::vector<Rule> &rules() const { return rules_; }
    std::vector<const Fact *> facts_for(const std::string &pred, std::size_t arity) const;
    std::vector<const Rule *> rules_for(const std::string &pred, std::size_t arity) const;
    const Rule *rule_by_id(const std::string &id) const;

    /// Every constant symbol occurring in facts or rules, sorted.
    const std::set<std::string> &constants() const { return constants_; }
    /// Facts `r(t, v)` with first argument `t`, arity 2.
    std::vector<const Fact *> role_facts(const Term &t) const;

    /// Order-independent hash of the stored content (hex).
    std::string content_hash() const;

    bool empty() const { return facts_.empty() && rules_.empty(); }

  private:
    std::vector<Fact> facts_;
    std::vector<Rule> rules_;
    std::map<Key, std::vector<std::size_t>> fact_index_;
    std::map<Key, std::vector<std::size_t>> rule_index_;
    std::map<std::string, std::vector<std::size_t>> role_index_;
    std::set<std::string> constants_;
};

/// Shortest decimal text that parses back to exactly `v`.
std::string format_real(double v);

/// 64-bit FNV-1a, rendered as 16 hex digits.
std::string fnv1a_hex(const std::string &data);

} // namespace bc
