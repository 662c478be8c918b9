#include "bc/wire.hpp"

namespace bc {

using nlohmann::json;

namespace {

const json &field(const json &j, const char *name) {
    if (!j.is_object() || !j.contains(name)) throw ProtocolError(std::string("missing field '") + name + "'");
    return j.at(name);
}

std::string str(const json &j, const char *name) {
    const json &v = field(j, name);
    if (!v.is_string()) throw ProtocolError(std::string("field '") + name + "' is not a string");
    return v.get<std::string>();
}

double real(const json &j, const char *name) {
    const json &v = field(j, name);
    if (!v.is_number()) throw ProtocolError(std::string("field '") + name + "' is not a number");
    return v.get<double>();
}

json encode_bindings(const Bindings &b) {
    json o = json::object();
    for (const auto &[v, t] : b) o[v] = encode_term(t);
    return o;
}

Bindings decode_bindings(const json &j) {
    if (!j.is_object()) throw ProtocolError("bindings must be an object");
    Bindings b;
    for (auto it = j.begin(); it != j.end(); ++it) b[it.key()] = decode_term(it.value());
    return b;
}

std::map<std::string, std::string> decode_string_map(const json &j) {
    if (!j.is_object()) throw ProtocolError("expected an object of strings");
    std::map<std::string, std::string> m;
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!it.value().is_string()) throw ProtocolError("expected a string value");
        m[it.key()] = it.value().get<std::string>();
    }
    return m;
}

json encode_pd(const PartialDerivation &pd, json &edges) {
    json nodes = json::array();
    for (const auto &g : pd.goals) nodes.push_back({{"id", g.id}, {"goal", encode_atom(g.atom)}});
    for (const auto &s : pd.supports) nodes.push_back({{"id", s.id}, {"support", encode_descriptor(s.descriptor)}});
    edges = json::array();
    for (const auto &e : pd.edges) edges.push_back({{"from", e.from}, {"to", e.to}, {"map", e.var_map}});
    return nodes;
}

int int_field(const json &j, const char *name) {
    const json &v = field(j, name);
    if (!v.is_number_integer()) throw ProtocolError(std::string("field '") + name + "' is not an integer");
    return v.get<int>();
}

} // namespace

json encode_term(const Term &t) {
    switch (t.kind) {
    case Term::Kind::Variable: return {{"v", t.name}};
    case Term::Kind::Constant: return {{"c", t.name}};
    case Term::Kind::Compound: {
        json args = json::array();
        for (const auto &a : t.args) args.push_back(encode_term(a));
        return {{"f", t.name}, {"args", args}};
    }
    }
    return {};
}

Term decode_term(const json &j) {
    if (!j.is_object()) throw ProtocolError("term must be an object");
    if (j.contains("v")) return Term::variable(str(j, "v"));
    if (j.contains("c")) return Term::constant(str(j, "c"));
    if (j.contains("f")) {
        const json &args = field(j, "args");
        if (!args.is_array()) throw ProtocolError("compound args must be an array");
        std::vector<Term> out;
        for (const auto &a : args) out.push_back(decode_term(a));
        return Term::compound(str(j, "f"), std::move(out));
    }
    throw ProtocolError("unknown term encoding");
}

json encode_atom(const Atom &a) {
    json args = json::array();
    for (const auto &t : a.args) args.push_back(encode_term(t));
    return {{"p", a.predicate}, {"args", args}};
}

Atom decode_atom(const json &j) {
    Atom a;
    a.predicate = str(j, "p");
    const json &args = field(j, "args");
    if (!args.is_array()) throw ProtocolError("atom args must be an array");
    for (const auto &t : args) a.args.push_back(decode_term(t));
    return a;
}

json encode_rule(const Rule &r) {
    json body = json::array();
    for (const auto &b : r.body) body.push_back(encode_atom(b));
    return {{"id", r.id}, {"head", encode_atom(r.head)}, {"body", body}, {"conf", r.confidence},
            {"tags", r.tags}, {"prov", r.provenance}};
}

Rule decode_rule(const json &j) {
    Rule r;
    r.id = str(j, "id");
    r.head = decode_atom(field(j, "head"));
    const json &body = field(j, "body");
    if (!body.is_array()) throw ProtocolError("rule body must be an array");
    for (const auto &b : body) r.body.push_back(decode_atom(b));
    r.confidence = real(j, "conf");
    const json &tags = field(j, "tags");
    if (!tags.is_array()) throw ProtocolError("rule tags must be an array");
    for (const auto &t : tags) {
        if (!t.is_string()) throw ProtocolError("tag must be a string");
        r.tags.insert(t.get<std::string>());
    }
    r.provenance = str(j, "prov");
    r.refresh_existentials();
    return r;
}

json encode_descriptor(const SupportDescriptor &d) {
    json j = {{"kind", to_string(d.kind)}, {"prover", d.prover}, {"conf", d.confidence},
              {"fixed", encode_bindings(d.fixed)}, {"action", d.action}};
    if (d.rule) j["rule"] = encode_rule(*d.rule);
    if (d.fact) j["fact"] = {{"atom", encode_atom(d.fact->atom)}, {"conf", d.fact->confidence}, {"prov", d.fact->provenance}};
    if (d.unification) {
        const auto &u = *d.unification;
        j["ur"] = {{"vars", encode_bindings(u.substitution.vars)},
                   {"symbols", u.substitution.symbols},
                   {"score", u.score},
                   {"meta", u.metadata}};
    }
    return j;
}

SupportDescriptor decode_descriptor(const json &j) {
    SupportDescriptor d;
    auto kind = support_kind_from_string(str(j, "kind"));
    if (!kind) throw ProtocolError("unknown support kind");
    d.kind = *kind;
    d.prover = str(j, "prover");
    d.confidence = real(j, "conf");
    d.fixed = decode_bindings(field(j, "fixed"));
    d.action = str(j, "action");
    if (j.contains("rule")) d.rule = decode_rule(j.at("rule"));
    if (j.contains("fact")) {
        const json &f = j.at("fact");
        d.fact = Fact{decode_atom(field(f, "atom")), real(f, "conf"), str(f, "prov")};
    }
    if (j.contains("ur")) {
        const json &u = j.at("ur");
        UnificationResult ur;
        ur.substitution.vars = decode_bindings(field(u, "vars"));
        ur.substitution.symbols = decode_string_map(field(u, "symbols"));
        ur.score = real(u, "score");
        ur.metadata = decode_string_map(field(u, "meta"));
        d.unification = std::move(ur);
    }
    return d;
}

json encode_params(const ExpansionParams &p) {
    return {{"maxRuleMatches", p.max_rule_matches},
            {"maxFactMatches", p.max_fact_matches},
            {"unifier", p.unifier},
            {"drg", p.drg},
            {"depth", p.depth}};
}

ExpansionParams decode_params(const json &j) {
    ExpansionParams p;
    const json &r = field(j, "maxRuleMatches");
    const json &f = field(j, "maxFactMatches");
    if (!r.is_number_unsigned() || !f.is_number_unsigned()) throw ProtocolError("match bounds must be unsigned");
    p.max_rule_matches = r.get<std::size_t>();
    p.max_fact_matches = f.get<std::size_t>();
    p.unifier = str(j, "unifier");
    const json &drg = field(j, "drg");
    if (!drg.is_boolean()) throw ProtocolError("drg must be a boolean");
    p.drg = drg.get<bool>();
    p.depth = int_field(j, "depth");
    return p;
}

std::string encode_message(const WorkMessage &m) {
    json j;
    switch (m.type) {
    case WorkMessage::Type::Hello:
        j = {{"t", "hello"}, {"worker", m.worker}, {"kb", m.kb}};
        break;
    case WorkMessage::Type::Expand: {
        json params = encode_params(m.params);
        params["kb"] = m.kb;
        j = {{"t", "expand"}, {"req", m.req}, {"goal", encode_atom(*m.goal)}, {"params", params}};
        break;
    }
    case WorkMessage::Type::Update: {
        json edges;
        json nodes = encode_pd(*m.derivation, edges);
        j = {{"t", "update"}, {"req", m.req}, {"root", m.derivation->root}, {"nodes", nodes},
             {"edges", edges}, {"done", m.done}};
        break;
    }
    case WorkMessage::Type::Err:
        j = {{"t", "err"}, {"req", m.req}, {"msg", m.msg}};
        break;
    case WorkMessage::Type::Bye:
        j = {{"t", "bye"}};
        break;
    }
    return j.dump();
}

WorkMessage decode_message(const std::string &line) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::exception &e) {
        throw ProtocolError(std::string("malformed frame: ") + e.what());
    }
    try {
        WorkMessage m;
        const std::string t = str(j, "t");
        if (t == "hello") {
            m.type = WorkMessage::Type::Hello;
            m.worker = str(j, "worker");
            m.kb = str(j, "kb");
        } else if (t == "expand") {
            m.type = WorkMessage::Type::Expand;
            m.req = str(j, "req");
            m.goal = decode_atom(field(j, "goal"));
            const json &params = field(j, "params");
            m.params = decode_params(params);
            m.kb = str(params, "kb");
        } else if (t == "update") {
            m.type = WorkMessage::Type::Update;
            m.req = str(j, "req");
            PartialDerivation pd;
            pd.root = int_field(j, "root");
            const json &nodes = field(j, "nodes");
            const json &edges = field(j, "edges");
            if (!nodes.is_array() || !edges.is_array()) throw ProtocolError("nodes and edges must be arrays");
            for (const auto &n : nodes) {
                const int id = int_field(n, "id");
                if (n.contains("goal"))
                    pd.goals.push_back({id, decode_atom(n.at("goal"))});
                else
                    pd.supports.push_back({id, decode_descriptor(field(n, "support"))});
            }
            for (const auto &e : edges)
                pd.edges.push_back({int_field(e, "from"), int_field(e, "to"), decode_string_map(field(e, "map"))});
            const json &done = field(j, "done");
            if (!done.is_boolean()) throw ProtocolError("done must be a boolean");
            m.done = done.get<bool>();
            m.derivation = std::move(pd);
        } else if (t == "err") {
            m.type = WorkMessage::Type::Err;
            m.req = str(j, "req");
            m.msg = str(j, "msg");
        } else if (t == "bye") {
            m.type = WorkMessage::Type::Bye;
        } else {
            throw ProtocolError("unknown message type '" + t + "'");
        }
        return m;
    } catch (const json::exception &e) {
        throw ProtocolError(std::string("malformed frame: ") + e.what());
    }
}

} // namespace bc
