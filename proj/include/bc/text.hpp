#pragma once

#include "bc/drg.hpp"
#include "bc/model.hpp"
#include "bc/unify.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace bc {

struct ParseDiagnostic {
    enum class Severity { Error, Warning };

    int line = 1;
    int column = 1;
    std::string message;
    Severity severity = Severity::Error;

    bool is_error() const { return severity == Severity::Error; }
};

template <class T>
struct Parsed {
    std::optional<T> value;
    std::vector<ParseDiagnostic> diagnostics;

    bool ok() const { return value.has_value(); }
    bool has_warnings() const {
        for (const auto &d : diagnostics)
            if (!d.is_error()) return true;
        return false;
    }
};

/// `file:line:col: error: message`
std::string format_diagnostic(const std::string &file, const ParseDiagnostic &d);

/// Statements: `[@id] [conf] [tags] [::] head [:- body, ...] .` with `//`
/// comments. Variables are written `?name`.
Parsed<KnowledgeBase> parse_kb(std::string_view text);
/// Same grammar, rules only (canned rule files).
Parsed<std::vector<Rule>> parse_rules(std::string_view text);
/// One atom, or a `,`-separated conjunction reified as `and$(...)`.
Parsed<Atom> parse_query(std::string_view text);
Parsed<std::vector<RuleTemplate>> parse_templates(std::string_view text);
/// Lines `X isa Y.`
Parsed<TypeTaxonomy> parse_taxonomy(std::string_view text);
/// TSV rows `sym1 <TAB> sym2 <TAB> score`.
Parsed<TableSimilarity> parse_similarity_table(std::string_view text);

std::string serialize(const KnowledgeBase &kb);
std::string serialize(const Atom &a);
std::string serialize_rules(const std::vector<Rule> &rules);
std::string serialize(const std::vector<RuleTemplate> &templates);
std::string serialize(const TypeTaxonomy &tax);
std::string serialize(const TableSimilarity &sim);

} // namespace bc
