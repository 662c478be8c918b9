#include "bc/loader.hpp"

#include "bc/text.hpp"

#include <fstream>
#include <sstream>

namespace bc {

namespace {

std::optional<std::string> read_file(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

template <class T, class F>
std::optional<T> load(const std::string &path, F parse, LoadResult &out) {
    auto text = read_file(path);
    if (!text) {
        out.errors.push_back(path + ": error: cannot read file");
        return std::nullopt;
    }
    Parsed<T> p = parse(*text);
    for (const auto &d : p.diagnostics)
        (d.is_error() ? out.errors : out.warnings).push_back(format_diagnostic(path, d));
    return std::move(p.value);
}

} // namespace

LoadResult load_session(const SessionPaths &paths) {
    LoadResult out;
    Session s;
    if (paths.kb.empty()) {
        out.errors.push_back("error: a knowledge base file is required");
    } else if (auto kb = load<KnowledgeBase>(paths.kb, parse_kb, out)) {
        s.kb = std::move(*kb);
        if (s.kb.empty()) out.warnings.push_back(paths.kb + ": warning: knowledge base is empty");
    }
    if (!paths.templates.empty())
        if (auto t = load<std::vector<RuleTemplate>>(paths.templates, parse_templates, out)) s.templates = std::move(*t);
    if (!paths.taxonomy.empty())
        if (auto t = load<TypeTaxonomy>(paths.taxonomy, parse_taxonomy, out)) s.taxonomy = std::move(*t);
    if (!paths.sim.empty())
        if (auto t = load<TableSimilarity>(paths.sim, parse_similarity_table, out))
            s.similarity = std::make_shared<TableSimilarity>(std::move(*t));
    if (!paths.canned.empty())
        if (auto t = load<std::vector<Rule>>(paths.canned, parse_rules, out)) s.canned = std::move(*t);
    if (out.errors.empty()) out.session = std::move(s);
    return out;
}

} // namespace bc
