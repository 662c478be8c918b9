#pragma once

#include "bc/loader.hpp"
#include "bc/text.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace th {

inline std::string fixture(const std::string &rel) { return std::string(BC_FIXTURES) + "/" + rel; }

inline std::string slurp(const std::string &path) {
    std::ifstream in(path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline bc::Atom atom(const std::string &text) {
    auto p = bc::parse_query(text);
    if (!p.ok()) throw std::runtime_error("bad atom in test: " + text);
    return *p.value;
}

inline bc::KnowledgeBase kb(const std::string &text) {
    auto p = bc::parse_kb(text);
    if (!p.ok()) throw std::runtime_error("bad kb in test: " + bc::format_diagnostic("<test>", p.diagnostics.at(0)));
    return *p.value;
}

inline bc::Rule rule(const std::string &text) {
    auto p = bc::parse_rules(text);
    if (!p.ok() || p.value->size() != 1) throw std::runtime_error("bad rule in test: " + text);
    return p.value->front();
}

inline bc::SessionPaths zoey_paths(bool canned = true) {
    bc::SessionPaths p;
    p.kb = fixture("zoey/zoey.bkb");
    p.templates = fixture("zoey/zoey.btl");
    p.taxonomy = fixture("zoey/zoey.tax");
    p.sim = fixture("zoey/zoey.tsv");
    if (canned) p.canned = fixture("zoey/zoey.canned.bkb");
    return p;
}

inline bc::Session load(const bc::SessionPaths &p) {
    auto r = bc::load_session(p);
    if (!r.session) throw std::runtime_error("fixture failed to load: " + (r.errors.empty() ? "" : r.errors[0]));
    return std::move(*r.session);
}

inline bc::Session session_for(const std::string &kb_file, const std::string &sim_file = {}) {
    bc::SessionPaths p;
    p.kb = fixture(kb_file);
    if (!sim_file.empty()) p.sim = fixture(sim_file);
    return load(p);
}

} // namespace th
