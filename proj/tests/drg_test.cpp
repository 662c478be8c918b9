#include "support/helpers.hpp"

#include <doctest.h>

using namespace bc;

TEST_SUITE("drg") {

TEST_CASE("possession template grounds to the story rule") {
    const Session s = th::load(th::zoey_paths(false));
    TemplateGenerator gen(s.templates, s.taxonomy);
    auto out = gen.generate(th::atom("hasGoal(Zoey, ?goal)"), s.kb);
    REQUIRE(out.size() == 1);
    CHECK(to_string(out[0].rule) == "hasGoal(Zoey, state(plant, Healthy)) :- hasPossession(Zoey, plant)");
    CHECK(out[0].score == doctest::Approx(0.8));
    CHECK(out[0].rule.id == "R2");
    CHECK(out[0].rule.provenance == "drg:template");
}

TEST_CASE("negative binding suppresses the template") {
    Session s = th::load(th::zoey_paths(false));
    s.taxonomy.add_edge("Zoey", "Dog");
    TemplateGenerator gen(s.templates, s.taxonomy);
    CHECK(gen.generate(th::atom("hasGoal(Zoey, ?goal)"), s.kb).empty());
}

TEST_CASE("no template head matches") {
    const Session s = th::load(th::zoey_paths(false));
    TemplateGenerator gen(s.templates, s.taxonomy);
    CHECK(gen.generate(th::atom("nosuch(Zoey)"), s.kb).empty());
}

TEST_CASE("canned rules") {
    auto rules = parse_rules("@R4 0.85 [causal] :: state(?p, Healthy) :- contact(?p, light).");
    REQUIRE(rules.ok());
    CannedGenerator gen(*rules.value);
    KnowledgeBase kb;
    auto out = gen.generate(th::atom("state(plant, Healthy)"), kb);
    REQUIRE(out.size() == 1);
    CHECK(out[0].rule.id == "R4");
    CHECK(out[0].score == doctest::Approx(0.85));
    CHECK(out[0].rule.has_tag("causal"));
    CHECK(out[0].rule.provenance == "drg:canned");
    CHECK(gen.generate(th::atom("state(plant)"), kb).empty());
    CHECK(CannedGenerator({}).generate(th::atom("state(plant, Healthy)"), kb).empty());
}

TEST_CASE("isa") {
    TypeTaxonomy t;
    t.add_edge("Zoey", "Person");
    t.add_edge("Person", "Agent");
    CHECK(isa(t, "Zoey", "Agent"));
    CHECK(isa(t, "Zoey", "Zoey"));
    CHECK_FALSE(isa(t, "Zoey", "Plant"));
    CHECK_FALSE(t.add_edge("Agent", "Zoey"));
}

}
