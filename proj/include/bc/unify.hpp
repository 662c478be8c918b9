#pragma once

#include "bc/model.hpp"

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace bc {

struct UnificationResult {
    Substitution substitution;
    double score = 1.0;
    std::map<std::string, std::string> metadata;

    friend bool operator==(const UnificationResult &, const UnificationResult &) = default;
};

struct UnifierConfig {
    double min_score = 0.5;      // results scoring below are dropped
    double context_boost = 0.05; // added per shared role
    std::size_t max_results = 5;
};

/// Symmetric, reflexive symbol similarity in [0, 1].
class SimilarityProvider {
  public:
    virtual ~SimilarityProvider() = default;
    virtual double similarity(const std::string &a, const std::string &b) const = 0;
};

/// 1 for equal symbols, 0 otherwise.
class IdentitySimilarity final : public SimilarityProvider {
  public:
    double similarity(const std::string &a, const std::string &b) const override {
        return a == b ? 1.0 : 0.0;
    }
};

/// Lookup table; missing pairs score 0 unless the symbols are equal.
class TableSimilarity final : public SimilarityProvider {
  public:
    void set(const std::string &a, const std::string &b, double score);
    double similarity(const std::string &a, const std::string &b) const override;
    std::size_t size() const { return table_.size(); }
    /// Rows in canonical (sorted, a <= b) order.
    const std::map<std::pair<std::string, std::string>, double> &rows() const { return table_; }

  private:
    std::map<std::pair<std::string, std::string>, double> table_;
};

/// Most general unifier with occurs check; score 1 and no symbol map.
std::optional<UnificationResult> syntactic_unify(const Atom &a1, const Atom &a2);

/// Similarity-tolerant unification. Mismatched predicates, constants and
/// functors contribute their similarity as a factor; the base score is the
/// geometric mean of those factors and each role (binary fact sharing the
/// key argument's relation and value) adds `cfg.context_boost`.
std::vector<UnificationResult> fuzzy_unify(const Atom &a1, const Atom &a2, const KnowledgeBase &kb,
                                           const SimilarityProvider &provider,
                                           const UnifierConfig &cfg);

/// Term-level variant without role context, used to rescue failed joins.
std::optional<UnificationResult> fuzzy_unify_terms(const Term &t1, const Term &t2,
                                                   const SimilarityProvider &provider,
                                                   const UnifierConfig &cfg);

/// unify(P1, P2, K) -> results sorted by descending score.
class Unifier {
  public:
    virtual ~Unifier() = default;
    virtual std::string name() const = 0;
    virtual std::vector<UnificationResult> unify(const Atom &a1, const Atom &a2,
                                                 const KnowledgeBase &kb) const = 0;
    /// Whether results may relate atoms with different predicates.
    virtual bool crosses_predicates() const { return false; }
};

class ExactUnifier final : public Unifier {
  public:
    std::string name() const override { return "exact"; }
    std::vector<UnificationResult> unify(const Atom &a1, const Atom &a2,
                                         const KnowledgeBase &kb) const override;
};

class FuzzyUnifier final : public Unifier {
  public:
    FuzzyUnifier(std::shared_ptr<const SimilarityProvider> provider, UnifierConfig cfg)
        : provider_(std::move(provider)), cfg_(cfg) {}
    std::string name() const override { return "fuzzy"; }
    std::vector<UnificationResult> unify(const Atom &a1, const Atom &a2,
                                         const KnowledgeBase &kb) const override;
    bool crosses_predicates() const override { return true; }

    const SimilarityProvider &provider() const { return *provider_; }
    const UnifierConfig &config() const { return cfg_; }

  private:
    std::shared_ptr<const SimilarityProvider> provider_;
    UnifierConfig cfg_;
};

} // namespace bc
