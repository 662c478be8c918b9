// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include "support/fuzz.hpp"
#include "support/scenarios.hpp"

#include "bc/wire.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <sstream>

using namespace bc;

namespace {

// Each check returns an empty string on success, otherwise what went wrong.
using Check = std::function<std::string(std::string &note)>;

bool has_error(const std::vector<ParseDiagnostic> &ds) {
    return std::any_of(ds.begin(), ds.end(), [](const ParseDiagnostic &d) { return d.is_error(); });
}

const Atom zoey_query = th::atom("motivates(Zoey, e3, ?goal)");

std::string zoey_tree_problems(const QueryResult &r) {
    std::ostringstream why;
    if (r.solutions.size() != 1) return "expected one solution, got " + std::to_string(r.solutions.size());
    const auto &sol = r.solutions[0];
    if (sol.bindings.at("?goal") != "state(plant, Healthy)") return "wrong answer " + sol.bindings.at("?goal");
    const ProofTree &t = sol.proofs.at(0);
    std::map<std::string, std::string> rules;
    for (const auto &n : t.nodes)
        if (!n.goal && !n.rule_id.empty() && n.first_seen < 0) rules[n.rule_id] = n.provenance;
    if (rules.size() != 7) why << rules.size() << " rule supports; ";
    if (rules["R1"] != "static") why << "R1 is " << rules["R1"] << "; ";
    for (const char *id : {"R2", "R4", "R5"})
        if (rules[id].rfind("drg:", 0) != 0) why << id << " is " << rules[id] << "; ";
    for (const char *id : {"R3", "R6", "R7"})
        if (rules[id] != "static") why << id << " is " << rules[id] << "; ";
    if (t.fuzzy.size() != 1) {
        why << t.fuzzy.size() << " fuzzy unifications; ";
    } else {
        const auto &f = t.fuzzy[0];
        if (f.from != "put" || f.to != "place" || f.kind != "unify")
            why << "fuzzy step is not put~place; ";
        if (std::abs(f.score - 0.90) > 1e-9) why << "fuzzy score " << f.score << "; ";
    }
    return why.str();
}

std::string zoey_end_to_end(std::string &note) {
    for (bool canned : {false, true}) {
        const auto t0 = std::chrono::steady_clock::now();
        auto loaded = load_session(th::zoey_paths(canned));
        if (!loaded.session) return "fixture did not load";
        const QueryResult r = run_query(*loaded.session, zoey_query, {});
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::string problems = zoey_tree_problems(r);
        if (secs >= 5.0) problems += "took " + std::to_string(secs) + " s";
        if (!problems.empty()) return (canned ? "with canned rules: " : "templates only: ") + problems;
        note += (canned ? ", canned " : "templates ") + std::to_string(secs).substr(0, 5) + " s";
    }
    return {};
}

std::string forward_closure(std::string &note) {
    std::mt19937_64 rng(20240101);
    EngineConfig cfg = th::exhaustive_config();
    cfg.fuzzy = false;
    cfg.params.drg = false;
    std::size_t atoms = 0;
    for (int i = 0; i < 100; ++i) {
        Session s;
        s.kb = oracle::random_horn_kb(rng);
        const auto closure = oracle::forward_chain(s.kb);
        atoms += closure.size();
        for (int p = 0; p < 5; ++p)
            if (th::engine_answers(s, p, cfg) != th::closure_answers(closure, p))
                return "kb " + std::to_string(i) + " differs on " + th::query_for(p);
    }
    note = std::to_string(atoms) + " closure atoms";
    return {};
}

std::string ilp_vs_enumeration(std::string &note) {
    std::mt19937_64 rng(777);
    std::size_t compared = 0;
    for (int i = 0; i < 200; ++i) {
        const IlpModel m = oracle::random_proof_graph(rng);
        const auto got = solve_top_k(m, 5);
        const auto all = oracle::enumerate_proofs(m);
        const std::size_t n = std::min<std::size_t>(5, all.size());
        if (got.size() != n) return "graph " + std::to_string(i) + ": " + std::to_string(got.size()) + " proofs, want " + std::to_string(n);
        for (std::size_t k = 0; k < n; ++k) {
            if (std::abs(got[k].objective - all[k].objective) > 1e-9) return "graph " + std::to_string(i) + ": score mismatch";
            if (got[k].included != all[k].included) return "graph " + std::to_string(i) + ": membership mismatch";
            if (!check_assignment(m, got[k]).empty()) return "graph " + std::to_string(i) + ": infeasible assignment";
        }
        compared += n;
    }
    note = std::to_string(compared) + " proofs";
    return {};
}

std::string tabling(std::string &note) {
    const Session s = th::session_for("misc/tabling.bkb");
    const QueryResult r = run_query(s, th::atom("goal(?x)"), {});
    int shared = 0;
    for (const auto &t : r.trace) shared += t.key == "shared/1(?_0)";
    note = std::to_string(r.trace.size()) + " expansions";
    if (shared != 1) return "shared expanded " + std::to_string(shared) + " times";
    if (r.solutions.size() != 2) return std::to_string(r.solutions.size()) + " solutions";
    return {};
}

std::map<std::string, double> top1(const Session &s, int predicate, int workers, std::uint64_t seed) {
    const QueryResult r = run_query(s, th::atom(th::query_for(predicate)), th::exhaustive_config(workers, seed));
    std::map<std::string, double> out;
    for (const auto &sol : r.solutions) {
        std::string key;
        for (const auto &[v, val] : sol.bindings) key += v + "=" + val + ";";
        out[key] = sol.score;
    }
    return out;
}

std::string parallel_invariance(std::string &note) {
    std::mt19937_64 rng(99);
    oracle::KbShape shape;
    shape.random_confidence = true;
    std::size_t runs = 0;
    for (int i = 0; i < 10; ++i) {
        Session s;
        s.kb = oracle::random_horn_kb(rng, shape);
        for (int p = 0; p < 5; ++p) {
            const auto reference = top1(s, p, 1, 0);
            for (int workers : {1, 4})
                for (std::uint64_t seed = 1; seed <= 20; ++seed) {
                    ++runs;
                    if (top1(s, p, workers, seed) != reference)
                        return "kb " + std::to_string(i) + " " + th::query_for(p) + " workers " + std::to_string(workers) +
                               " seed " + std::to_string(seed);
                }
        }
    }
    note = std::to_string(runs) + " runs";
    return {};
}

std::string calibration(std::string &) {
    const Session s = th::session_for("misc/calibration.bkb", "misc/calibration.tsv");
    const auto res = fuzzy_unify(th::atom("put(e1)"), th::atom("place(e2)"), s.kb, *s.similarity, s.unifier);
    if (res.size() != 1) return std::to_string(res.size()) + " results";
    const auto &sym = res[0].substitution.symbols;
    if (sym.size() != 2 || sym.count("put") == 0 || sym.at("put") != "place" || sym.count("e1") == 0 || sym.at("e1") != "e2")
        return "unexpected mapping";
    if (std::abs(res[0].score - 0.90) > 1e-9) return "score " + std::to_string(res[0].score);
    IdentitySimilarity identity;
    if (!fuzzy_unify(th::atom("put(e1)"), th::atom("place(e2)"), s.kb, identity, s.unifier).empty())
        return "identity provider matched";
    return {};
}

std::string join_fallback(std::string &note) {
    const Session s = th::session_for("misc/join.bkb", "misc/join.tsv");
    const Atom q = th::atom("sitsOn(Zoey, ?x), comfortable(?x)");
    EngineConfig cfg;
    const QueryResult with = run_query(s, q, cfg);
    if (with.solutions.size() != 1) return "fallback gave " + std::to_string(with.solutions.size()) + " solutions";
    if (std::abs(with.solutions[0].score - 0.9) > 1e-9) return "score " + std::to_string(with.solutions[0].score);
    cfg.join_fallback = false;
    if (!run_query(s, q, cfg).solutions.empty()) return "exact join found a solution";
    note = "?x = " + with.solutions[0].bindings.at("?x");
    return {};
}

std::string skolemization(std::string &note) {
    const Session s = th::session_for("misc/skolem.bkb");
    const QueryResult r = run_query(s, th::atom("hasThing(ann), cares(ann, ?y), owns(ann, ?z)"), {});
    if (r.solutions.empty()) return "no solution";
    const auto &b = r.solutions[0].bindings;
    if (b.at("?y") != "sk$r9$d(ann)" || b.at("?z") != "sk$r9$d(ann)") return "bindings " + b.at("?y") + ", " + b.at("?z");
    int derived = 0;
    for (const auto &n : r.graph->goals())
        if (n.derived && to_string(n.atom) == "owns(ann, sk$r9$d(ann))") ++derived;
    if (derived != 1) return std::to_string(derived) + " derived nodes";
    note = b.at("?y");
    return {};
}

std::string template_drg(std::string &) {
    Session s = th::load(th::zoey_paths(false));
    TemplateGenerator gen(s.templates, s.taxonomy);
    const auto out = gen.generate(th::atom("hasGoal(Zoey, ?goal)"), s.kb);
    if (out.size() != 1) return std::to_string(out.size()) + " rules";
    if (to_string(out[0].rule) != "hasGoal(Zoey, state(plant, Healthy)) :- hasPossession(Zoey, plant)")
        return "rule " + to_string(out[0].rule);
    if (std::abs(out[0].score - 0.8) > 1e-12) return "confidence " + std::to_string(out[0].score);
    s.taxonomy.add_edge("Zoey", "Dog");
    TemplateGenerator blocked(s.templates, s.taxonomy);
    if (!blocked.generate(th::atom("hasGoal(Zoey, ?goal)"), s.kb).empty()) return "negative binding ignored";
    return {};
}

std::string best_first(std::string &note) {
    const Session s = th::session_for("misc/bestfirst.bkb");
    const QueryResult r = run_query(s, th::atom("top(?x)"), {});
    std::size_t last_a = 0, first_b = r.trace.size();
    for (std::size_t i = 0; i < r.trace.size(); ++i) {
        const std::string &k = r.trace[i].key;
        if (k.rfind("a", 0) == 0 || k.rfind("fa", 0) == 0) last_a = i;
        if ((k.rfind("b", 0) == 0 || k.rfind("fb", 0) == 0) && first_b == r.trace.size()) first_b = i;
    }
    for (const auto &t : r.trace) note += (note.empty() ? "" : " ") + t.key.substr(0, t.key.find('/'));
    if (first_b == r.trace.size()) return "0.5 branch never expanded";
    if (last_a > first_b) return "branches interleave";
    return {};
}

std::string loopback(std::string &) {
    const Session s = th::load(th::zoey_paths(false));
    const std::string local = th::render_all(run_query(s, zoey_query, {}));
    th::WorkerThread w(s);
    EngineConfig cfg;
    cfg.workers = 0;
    cfg.remote_workers = {w.endpoint()};
    const QueryResult r = run_query(s, zoey_query, cfg);
    for (const auto &t : r.trace)
        if (t.worker.rfind("w", 0) == 0) return "expansion ran in process";
    if (th::render_all(r) != local) return "output differs";
    return {};
}

std::string frontend(std::string &note) {
    const std::vector<std::string> files{"zoey/zoey.bkb", "zoey/zoey.btl", "zoey/zoey.tax", "zoey/zoey.tsv",
                                         "zoey/zoey.canned.bkb", "misc/skolem.bkb", "misc/join.bkb"};
    std::vector<std::string> seeds;
    for (const auto &f : files) seeds.push_back(th::slurp(th::fixture(f)));
    std::mt19937_64 rng(31337);
    std::size_t rejected = 0;
    for (int i = 0; i < 10000; ++i) {
        const std::string in = oracle::fuzz_input(rng, seeds);
        bool ok = true;
        auto look = [&](const auto &p) {
            if (p.ok()) return;
            ++rejected;
            if (!has_error(p.diagnostics)) ok = false;
        };
        try {
            look(parse_kb(in));
            look(parse_query(in));
            look(parse_rules(in));
            look(parse_templates(in));
            look(parse_taxonomy(in));
            look(parse_similarity_table(in));
        } catch (const std::exception &e) {
            return "input " + std::to_string(i) + " threw " + e.what();
        }
        if (!ok) return "input " + std::to_string(i) + " failed without an error diagnostic";
    }
    for (const char *f : {"zoey/zoey.bkb", "misc/tabling.bkb", "misc/bestfirst.bkb", "misc/skolem.bkb", "misc/join.bkb",
                          "misc/calibration.bkb"}) {
        auto a = parse_kb(th::slurp(th::fixture(f)));
        if (!a.ok()) return std::string(f) + " does not parse";
        const std::string once = serialize(*a.value);
        auto b = parse_kb(once);
        if (!b.ok() || serialize(*b.value) != once) return std::string(f) + " does not round trip";
    }
    auto rules = parse_rules(th::slurp(th::fixture("zoey/zoey.canned.bkb")));
    auto rules2 = parse_rules(serialize_rules(*rules.value));
    if (!rules2.ok() || *rules2.value != *rules.value) return "canned rules do not round trip";
    auto tpl = parse_templates(th::slurp(th::fixture("zoey/zoey.btl")));
    auto tpl2 = parse_templates(serialize(*tpl.value));
    if (!tpl2.ok() || serialize(*tpl2.value) != serialize(*tpl.value)) return "templates do not round trip";
    auto tax = parse_taxonomy(th::slurp(th::fixture("zoey/zoey.tax")));
    auto tax2 = parse_taxonomy(serialize(*tax.value));
    if (!tax2.ok() || tax2.value->edges() != tax.value->edges()) return "taxonomy does not round trip";
    for (const char *f : {"zoey/zoey.tsv", "misc/join.tsv", "misc/calibration.tsv"}) {
        auto a = parse_similarity_table(th::slurp(th::fixture(f)));
        auto b = parse_similarity_table(serialize(*a.value));
        if (!b.ok() || b.value->rows() != a.value->rows()) return std::string(f) + " does not round trip";
    }
    note = std::to_string(rejected) + " rejections";
    return {};
}

} // namespace

int main() {
    const std::vector<std::pair<std::string, Check>> criteria{
        {"zoey end to end", zoey_end_to_end},
        {"answers equal forward closure", forward_closure},
        {"top-k equals exhaustive enumeration", ilp_vs_enumeration},
        {"shared sub-goal expanded once", tabling},
        {"worker count and seed invariance", parallel_invariance},
        {"fuzzy unification calibration", calibration},
        {"join similarity fallback", join_fallback},
        {"skolemized inference", skolemization},
        {"template generation and exclusion", template_drg},
        {"best-first order", best_first},
        {"loopback tcp worker", loopback},
        {"parser fuzzing and round trips", frontend},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        std::string note, problem;
        try {
            problem = criteria[i].second(note);
        } catch (const std::exception &e) {
            problem = std::string("threw: ") + e.what();
        }
        std::cout << (problem.empty() ? "PASS" : "FAIL") << " " << i + 1 << " " << criteria[i].first;
        if (!problem.empty()) std::cout << ": " << problem;
        else if (!note.empty()) std::cout << " (" << note << ")";
        std::cout << std::endl;
        failed += !problem.empty();
    }
    return failed == 0 ? 0 : 1;
}
