#include "support/helpers.hpp"

#include <doctest.h>

#include <cmath>

using namespace bc;

TEST_SUITE("unify") {

TEST_CASE("syntactic unification") {
    auto ur = syntactic_unify(th::atom("hasPossession(Zoey, ?y)"), th::atom("hasPossession(?x, plant)"));
    REQUIRE(ur);
    CHECK(ur->score == 1.0);
    CHECK(ur->substitution.vars.at("x") == Term::constant("Zoey"));
    CHECK(ur->substitution.vars.at("y") == Term::constant("plant"));
    CHECK_FALSE(syntactic_unify(th::atom("put(e1)"), th::atom("place(e2)")));
    CHECK_FALSE(syntactic_unify(th::atom("p(?x, f(?x))"), th::atom("p(?y, ?y)")));
}

TEST_CASE("fuzzy calibration against the hand-evaluated formula") {
    const Session s = th::session_for("misc/calibration.bkb", "misc/calibration.tsv");
    UnifierConfig cfg;
    auto res = fuzzy_unify(th::atom("put(e1)"), th::atom("place(e2)"), s.kb, *s.similarity, cfg);
    REQUIRE(res.size() == 1);
    // geometric mean of the two symbol factors, plus one boost per shared role
    const double base = std::sqrt(0.75 * 0.75);
    const double expected = std::min(1.0, base + 3 * cfg.context_boost);
    CHECK(std::abs(res[0].score - expected) < 1e-9);
    CHECK(std::abs(res[0].score - 0.90) < 1e-9);
    CHECK(res[0].substitution.symbols.at("put") == "place");
    CHECK(res[0].substitution.symbols.at("e1") == "e2");
    CHECK(res[0].metadata.at("roles") == "agent,destination,theme");

    IdentitySimilarity identity;
    CHECK(fuzzy_unify(th::atom("put(e1)"), th::atom("place(e2)"), s.kb, identity, cfg).empty());
}

TEST_CASE("identical ground atoms") {
    const Session s = th::session_for("misc/calibration.bkb", "misc/calibration.tsv");
    auto res = fuzzy_unify(th::atom("theme(e1, plant)"), th::atom("theme(e1, plant)"), s.kb, *s.similarity, {});
    REQUIRE(res.size() == 1);
    CHECK(res[0].score == 1.0);
    CHECK(res[0].substitution.symbols.empty());
}

TEST_CASE("weak similarity stays below the threshold") {
    KnowledgeBase kb = th::kb("put(e1). sing(e5).");
    TableSimilarity t;
    t.set("put", "sing", 0.1);
    // base 0.1, no shared roles, 0.1 < 0.5
    CHECK(fuzzy_unify(th::atom("put(e1)"), th::atom("sing(e1)"), kb, t, {}).empty());
    auto exact = fuzzy_unify(th::atom("put(?x)"), th::atom("put(e5)"), kb, t, {});
    REQUIRE(exact.size() == 1);
    CHECK(exact[0].score == 1.0);
}

TEST_CASE("variable bindings contribute no factor") {
    KnowledgeBase kb;
    TableSimilarity t;
    t.set("put", "place", 0.64);
    auto res = fuzzy_unify(th::atom("put(?e)"), th::atom("place(e9)"), kb, t, {});
    REQUIRE(res.size() == 1);
    CHECK(res[0].score == doctest::Approx(0.64));
    CHECK(res[0].substitution.vars.at("e") == Term::constant("e9"));
}

TEST_CASE("score is capped at one") {
    KnowledgeBase kb = th::kb("a(x, v1). b(x, v2). c(x, v3). a(y, v1). b(y, v2). c(y, v3).");
    TableSimilarity t;
    t.set("x", "y", 0.99);
    auto res = fuzzy_unify(th::atom("p(x)"), th::atom("p(y)"), kb, t, {});
    REQUIRE(res.size() == 1);
    CHECK(res[0].score == 1.0);
}

TEST_CASE("unifier interface") {
    KnowledgeBase kb;
    auto t = std::make_shared<TableSimilarity>();
    t->set("put", "place", 0.75);
    ExactUnifier exact;
    FuzzyUnifier fuzzy(t, {});
    CHECK(exact.unify(th::atom("put(a)"), th::atom("place(a)"), kb).empty());
    CHECK(fuzzy.unify(th::atom("put(a)"), th::atom("place(a)"), kb).size() == 1);
    CHECK(fuzzy.crosses_predicates());
    CHECK_FALSE(exact.crosses_predicates());
}

}
