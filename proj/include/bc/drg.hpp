#pragma once

#include "bc/model.hpp"

#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace bc {

/// Variable -> type name.
using TypeBinding = std::map<std::string, std::string>;

/// Over-generalized rule whose variables carry types. A grounding is dropped
/// when it satisfies every pair of any negative binding.
struct RuleTemplate {
    std::string id;
    Rule pattern;
    TypeBinding type_constraints;
    std::vector<TypeBinding> negative_bindings;
    double base_confidence = 1.0;
    std::set<std::string> tags;
};

/// Acyclic `isa` graph; queries are reflexive and transitive.
class TypeTaxonomy {
  public:
    /// False (and no change) if the edge would close a cycle.
    bool add_edge(const std::string &child, const std::string &parent);
    bool isa(const std::string &x, const std::string &type) const;
    /// Whether `x` appears in any edge.
    bool known(const std::string &x) const;
    const std::set<std::pair<std::string, std::string>> &edges() const { return edges_; }

  private:
    std::map<std::string, std::set<std::string>> parents_;
    std::set<std::pair<std::string, std::string>> edges_;
};

inline bool isa(const TypeTaxonomy &tax, const std::string &x, const std::string &type) {
    return tax.isa(x, type);
}

struct GeneratedRule {
    Rule rule;
    double score = 1.0;
};

/// Returns rules relevant to proving a goal.
class RuleGenerator {
  public:
    virtual ~RuleGenerator() = default;
    virtual std::string name() const = 0;
    virtual std::vector<GeneratedRule> generate(const Atom &goal, const KnowledgeBase &kb) const = 0;
};

struct TemplateGeneratorConfig {
    std::size_t max_groundings = 1000;
    /// Plausibility of a grounded rule in (0, 1]; multiplies the score.
    std::function<double(const Rule &)> plausibility;
};

/// Specializes templates against the KB's constants.
class TemplateGenerator final : public RuleGenerator {
  public:
    struct Output {
        std::vector<GeneratedRule> rules;
        std::vector<std::string> warnings;
    };

    TemplateGenerator(std::vector<RuleTemplate> templates, TypeTaxonomy taxonomy,
                      TemplateGeneratorConfig cfg = {});

    std::string name() const override { return "template"; }
    std::vector<GeneratedRule> generate(const Atom &goal, const KnowledgeBase &kb) const override {
        return generate_with_warnings(goal, kb).rules;
    }
    Output generate_with_warnings(const Atom &goal, const KnowledgeBase &kb) const;

    const std::vector<RuleTemplate> &templates() const { return templates_; }
    const TypeTaxonomy &taxonomy() const { return taxonomy_; }

  private:
    std::vector<RuleTemplate> templates_;
    TypeTaxonomy taxonomy_;
    TemplateGeneratorConfig cfg_;
};

/// Serves a fixed rule file, keyed by head predicate/arity.
class CannedGenerator final : public RuleGenerator {
  public:
    explicit CannedGenerator(std::vector<Rule> rules);
    std::string name() const override { return "canned"; }
    std::vector<GeneratedRule> generate(const Atom &goal, const KnowledgeBase &kb) const override;
    const std::vector<Rule> &rules() const { return rules_; }

  private:
    std::vector<Rule> rules_;
    std::map<std::pair<std::string, std::size_t>, std::vector<std::size_t>> index_;
};

} // namespace bc
