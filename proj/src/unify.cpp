#include "bc/unify.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace bc {

void TableSimilarity::set(const std::string &a, const std::string &b, double score) {
    table_[a <= b ? std::make_pair(a, b) : std::make_pair(b, a)] = score;
}

double TableSimilarity::similarity(const std::string &a, const std::string &b) const {
    if (a == b) return 1.0;
    auto it = table_.find(a <= b ? std::make_pair(a, b) : std::make_pair(b, a));
    return it == table_.end() ? 0.0 : it->second;
}

std::optional<UnificationResult> syntactic_unify(const Atom &a1, const Atom &a2) {
    if (a1.predicate != a2.predicate || a1.arity() != a2.arity()) return std::nullopt;
    Bindings b;
    for (std::size_t i = 0; i < a1.arity(); ++i)
        if (!unify_terms(a1.args[i], a2.args[i], b)) return std::nullopt;
    UnificationResult ur;
    ur.substitution.vars = std::move(b);
    ur.score = 1.0;
    return ur;
}

namespace {

class FuzzyMatcher {
  public:
    FuzzyMatcher(const SimilarityProvider &p) : provider_(p) {}

    bool symbol(const std::string &x, const std::string &y) {
        if (x == y) {
            factors_.push_back(1.0);
            return true;
        }
        auto it = symbols_.find(x);
        if (it != symbols_.end() && it->second != y) return false;
        const double s = provider_.similarity(x, y);
        if (s <= 0.0) return false;
        symbols_[x] = y;
        factors_.push_back(s);
        raw_["sim:" + x + "=" + y] = format_real(s);
        return true;
    }

    bool term(const Term &x, const Term &y) {
        Term a = substitute(x, bindings_);
        Term c = substitute(y, bindings_);
        if (a.is_var() || c.is_var()) {
            if (a == c) return true;
            return unify_terms(a, c, bindings_);
        }
        if (a.kind != c.kind || a.args.size() != c.args.size()) return false;
        if (!symbol(a.name, c.name)) return false;
        for (std::size_t i = 0; i < a.args.size(); ++i)
            if (!term(a.args[i], c.args[i])) return false;
        return true;
    }

    double base() const {
        if (factors_.empty()) return 1.0;
        double log_sum = 0.0;
        for (double f : factors_) log_sum += std::log(f);
        return std::exp(log_sum / static_cast<double>(factors_.size()));
    }

    Bindings bindings_;
    SymbolMap symbols_;
    std::map<std::string, std::string> raw_;

  private:
    const SimilarityProvider &provider_;
    std::vector<double> factors_;
};

std::set<std::string> shared_roles(const Term &k1, const Term &k2, const KnowledgeBase &kb,
                                   const SimilarityProvider &provider, double tau) {
    std::set<std::string> out;
    if (!k1.is_ground() || !k2.is_ground()) return out;
    auto r1 = kb.role_facts(k1);
    auto r2 = kb.role_facts(k2);
    for (const Fact *f1 : r1) {
        for (const Fact *f2 : r2) {
            if (f1->atom.predicate != f2->atom.predicate) continue;
            const Term &v1 = f1->atom.args[1];
            const Term &v2 = f2->atom.args[1];
            bool match = v1 == v2;
            if (!match && v1.is_const() && v2.is_const())
                match = provider.similarity(v1.name, v2.name) >= tau;
            if (match) out.insert(f1->atom.predicate);
        }
    }
    return out;
}

} // namespace

std::vector<UnificationResult> fuzzy_unify(const Atom &a1, const Atom &a2, const KnowledgeBase &kb,
                                           const SimilarityProvider &provider,
                                           const UnifierConfig &cfg) {
    if (a1.arity() != a2.arity()) return {};
    FuzzyMatcher m(provider);
    if (!m.symbol(a1.predicate, a2.predicate)) return {};
    for (std::size_t i = 0; i < a1.arity(); ++i)
        if (!m.term(a1.args[i], a2.args[i])) return {};

    const double base = m.base();
    std::set<std::string> roles;
    if (a1.arity() > 0)
        roles = shared_roles(substitute(a1.args[0], m.bindings_), substitute(a2.args[0], m.bindings_), kb,
                             provider, cfg.min_score);
    const double boost = cfg.context_boost * static_cast<double>(roles.size());
    const double score = std::min(1.0, base + boost);
    if (score < cfg.min_score) return {};

    UnificationResult ur;
    ur.substitution.vars = std::move(m.bindings_);
    ur.substitution.symbols = std::move(m.symbols_);
    ur.score = score;
    ur.metadata = std::move(m.raw_);
    if (!ur.substitution.symbols.empty() || !roles.empty()) {
        ur.metadata["base"] = format_real(base);
        std::string rs;
        for (const auto &r : roles) rs += (rs.empty() ? "" : ",") + r;
        ur.metadata["roles"] = rs;
    }
    std::vector<UnificationResult> out{std::move(ur)};
    if (out.size() > cfg.max_results) out.resize(cfg.max_results);
    return out;
}

std::optional<UnificationResult> fuzzy_unify_terms(const Term &t1, const Term &t2,
                                                   const SimilarityProvider &provider,
                                                   const UnifierConfig &cfg) {
    FuzzyMatcher m(provider);
    if (!m.term(t1, t2)) return std::nullopt;
    const double score = m.base();
    if (score < cfg.min_score) return std::nullopt;
    UnificationResult ur;
    ur.substitution.vars = std::move(m.bindings_);
    ur.substitution.symbols = std::move(m.symbols_);
    ur.score = score;
    ur.metadata = std::move(m.raw_);
    return ur;
}

std::vector<UnificationResult> ExactUnifier::unify(const Atom &a1, const Atom &a2,
                                                   const KnowledgeBase &) const {
    if (auto ur = syntactic_unify(a1, a2)) return {std::move(*ur)};
    return {};
}

std::vector<UnificationResult> FuzzyUnifier::unify(const Atom &a1, const Atom &a2,
                                                   const KnowledgeBase &kb) const {
    return fuzzy_unify(a1, a2, kb, *provider_, cfg_);
}

} // namespace bc
