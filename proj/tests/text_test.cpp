#include "support/fuzz.hpp"
#include "support/helpers.hpp"

#include <doctest.h>

#include <fstream>
#include <sstream>

using namespace bc;

namespace {

std::string slurp(const std::string &path) {
    std::ifstream in(path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

bool has_error(const std::vector<ParseDiagnostic> &ds) {
    for (const auto &d : ds)
        if (d.is_error()) return true;
    return false;
}

} // namespace

TEST_SUITE("text") {

TEST_CASE("fact with confidence") {
    auto p = parse_kb("0.9 :: put(e2).");
    REQUIRE(p.ok());
    REQUIRE(p.value->facts().size() == 1);
    CHECK(to_string(p.value->facts()[0].atom) == "put(e2)");
    CHECK(p.value->facts()[0].confidence == doctest::Approx(0.9));
}

TEST_CASE("rule defaults to confidence one") {
    auto p = parse_kb("motivates(?a,?act,?g) :- hasGoal(?a,?g), leadsTo(?act,?g).");
    REQUIRE(p.ok());
    REQUIRE(p.value->rules().size() == 1);
    const Rule &r = p.value->rules()[0];
    CHECK(r.confidence == 1.0);
    CHECK(r.body.size() == 2);
    CHECK(r.existentials.empty());
}

TEST_CASE("head-only variables are existential") {
    auto p = parse_kb("0.8 :: p(?x, ?y) :- q(?x).");
    REQUIRE(p.ok());
    CHECK(p.value->rules()[0].existentials == std::set<std::string>{"y"});
}

TEST_CASE("labels and tags") {
    auto p = parse_kb("@R4 0.85 [causal] :: state(?p, Healthy) :- contact(?p, light).");
    REQUIRE(p.ok());
    const Rule &r = p.value->rules()[0];
    CHECK(r.id == "R4");
    CHECK(r.has_tag("causal"));
    CHECK(r.provenance == "static");
}

TEST_CASE("kb errors") {
    CHECK_FALSE(parse_kb("1.3 :: p(a).").ok());
    CHECK_FALSE(parse_kb("p(?x).").ok());
    CHECK_FALSE(parse_kb("@r p(a) :- q(a). @r p(b) :- q(b).").ok());
    CHECK_FALSE(parse_kb("p(a)").ok());
    auto p = parse_kb("p(a).\nq(b, .\n");
    REQUIRE(!p.diagnostics.empty());
    CHECK(p.diagnostics[0].line == 2);
}

TEST_CASE("queries") {
    auto q = parse_query("motivates(Zoey, e3, ?goal)");
    REQUIRE(q.ok());
    CHECK(vars_of(*q.value) == std::vector<std::string>{"goal"});
    auto g = parse_query("put(e2)");
    REQUIRE(g.ok());
    CHECK(g.value->is_ground());
    auto c = parse_query("p(?x), q(?x)");
    REQUIRE(c.ok());
    CHECK(c.value->is_conjunction());
}

TEST_CASE("dangling comma is reported at the comma") {
    auto q = parse_query("motivates(Zoey,");
    REQUIRE_FALSE(q.ok());
    REQUIRE(!q.diagnostics.empty());
    CHECK(q.diagnostics[0].line == 1);
    CHECK(q.diagnostics[0].column == 15);
}

TEST_CASE("templates") {
    auto p = parse_templates("template possession 0.8 : hasGoal(?agent, state(?o, ?s)) :- hasPossession(?agent, ?o)\n"
                             "  where ?agent : Person; ?o : Plant\n"
                             "  except (?agent : Dog).");
    REQUIRE(p.ok());
    REQUIRE(p.value->size() == 1);
    const RuleTemplate &t = p.value->front();
    CHECK(t.id == "possession");
    CHECK(t.pattern.confidence == doctest::Approx(0.8));
    CHECK(t.type_constraints.at("agent") == "Person");
    REQUIRE(t.negative_bindings.size() == 1);
    CHECK(t.negative_bindings[0].at("agent") == "Dog");
    auto empty = parse_templates("");
    REQUIRE(empty.ok());
    CHECK(empty.value->empty());
    CHECK_FALSE(parse_templates("template t 0.5 : p(?x) :- q(?x) where ?z : T.").ok());
}

TEST_CASE("taxonomy") {
    auto t = parse_taxonomy("Zoey isa Person.\nPerson isa Agent.");
    REQUIRE(t.ok());
    CHECK(t.value->isa("Zoey", "Agent"));
    CHECK_FALSE(t.value->isa("Agent", "Zoey"));
    CHECK_FALSE(parse_taxonomy("A isa B.\nB isa A.").ok());
    auto e = parse_taxonomy("");
    REQUIRE(e.ok());
    CHECK(e.value->isa("T", "T"));
    CHECK_FALSE(e.value->isa("T", "U"));
}

TEST_CASE("similarity table") {
    auto s = parse_similarity_table("put\tplace\t0.75\n");
    REQUIRE(s.ok());
    CHECK(s.value->similarity("place", "put") == doctest::Approx(0.75));
    CHECK(s.value->similarity("x", "x") == 1.0);
    CHECK_FALSE(parse_similarity_table("put\tplace\t1.3\n").ok());
    CHECK_FALSE(parse_similarity_table("put place 0.5\n").ok());
}

TEST_CASE("serialize compound arguments") {
    CHECK(serialize(th::atom("hasGoal(Zoey, state(plant, Healthy))")) == "hasGoal(Zoey, state(plant, Healthy))");
}

TEST_CASE("fixture corpus round trips") {
    for (const auto *f : {"zoey/zoey.bkb", "misc/tabling.bkb", "misc/bestfirst.bkb", "misc/skolem.bkb",
                          "misc/join.bkb", "misc/calibration.bkb"}) {
        CAPTURE(f);
        auto a = parse_kb(slurp(th::fixture(f)));
        REQUIRE(a.ok());
        const std::string s1 = serialize(*a.value);
        auto b = parse_kb(s1);
        REQUIRE(b.ok());
        CHECK(b.value->content_hash() == a.value->content_hash());
        CHECK(serialize(*b.value) == s1);
    }
    {
        auto a = parse_rules(slurp(th::fixture("zoey/zoey.canned.bkb")));
        REQUIRE(a.ok());
        auto b = parse_rules(serialize_rules(*a.value));
        REQUIRE(b.ok());
        CHECK(*b.value == *a.value);
    }
    {
        auto a = parse_templates(slurp(th::fixture("zoey/zoey.btl")));
        REQUIRE(a.ok());
        auto b = parse_templates(serialize(*a.value));
        REQUIRE(b.ok());
        CHECK(serialize(*b.value) == serialize(*a.value));
    }
    {
        auto a = parse_taxonomy(slurp(th::fixture("zoey/zoey.tax")));
        REQUIRE(a.ok());
        auto b = parse_taxonomy(serialize(*a.value));
        REQUIRE(b.ok());
        CHECK(b.value->edges() == a.value->edges());
    }
    for (const auto *f : {"zoey/zoey.tsv", "misc/join.tsv", "misc/calibration.tsv"}) {
        auto a = parse_similarity_table(slurp(th::fixture(f)));
        REQUIRE(a.ok());
        auto b = parse_similarity_table(serialize(*a.value));
        REQUIRE(b.ok());
        CHECK(b.value->rows() == a.value->rows());
    }
}

TEST_CASE("parsers never throw on random input") {
    std::vector<std::string> seeds;
    for (const auto *f : {"zoey/zoey.bkb", "zoey/zoey.btl", "zoey/zoey.tax", "zoey/zoey.tsv", "misc/skolem.bkb"})
        seeds.push_back(slurp(th::fixture(f)));
    std::mt19937_64 rng(7);
    for (int i = 0; i < 2000; ++i) {
        const std::string in = oracle::fuzz_input(rng, seeds);
        CAPTURE(in);
        auto check = [](const auto &p) {
            if (!p.ok()) CHECK(has_error(p.diagnostics));
        };
        REQUIRE_NOTHROW(check(parse_kb(in)));
        REQUIRE_NOTHROW(check(parse_query(in)));
        REQUIRE_NOTHROW(check(parse_templates(in)));
        REQUIRE_NOTHROW(check(parse_taxonomy(in)));
        REQUIRE_NOTHROW(check(parse_similarity_table(in)));
    }
}

}
