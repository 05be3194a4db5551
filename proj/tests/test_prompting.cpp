#include <doctest.h>

#include <cmath>

#include "latlab/prompting.hpp"

using namespace latlab;

TEST_SUITE("prompting") {

TEST_CASE("table construction invariants") {
    const EmbeddingTable t1 = make_table(3);
    const EmbeddingTable t2 = make_table(3);
    CHECK(max_abs_diff(t1.base, t2.base) == 0.0);
    for (int i = 0; i < kAttributeCount; ++i) {
        CHECK(max_abs_diff(t1.tokens[static_cast<size_t>(i)], t2.tokens[static_cast<size_t>(i)]) == 0.0);
        CHECK(std::abs(l2_norm(t1.tokens[static_cast<size_t>(i)]) - 1.0) <= 1e-12);
        for (int j = i + 1; j < kAttributeCount; ++j) {
            CHECK(std::abs(dot(t1.tokens[static_cast<size_t>(i)], t1.tokens[static_cast<size_t>(j)])) <= 0.5);
        }
    }
}

TEST_CASE("embed: base case, set-order independence, additivity") {
    const EmbeddingTable table = make_table(5);
    CHECK(max_abs_diff(embed(AttributeSpec{}, table).vector, table.base) == 0.0);

    const Embedding de = embed(AttributeSpec{Attribute::Device, Attribute::Effusion}, table);
    const Embedding ed = embed(AttributeSpec{Attribute::Effusion, Attribute::Device}, table);
    CHECK(max_abs_diff(de.vector, ed.vector) == 0.0);

    const Embedding dm = embed(AttributeSpec{Attribute::Device, Attribute::Marker}, table);
    const Embedding d = embed(AttributeSpec{Attribute::Device}, table);
    CHECK(max_abs_diff(sub(dm.vector, d.vector), table.tokens[static_cast<size_t>(Attribute::Marker)]) < 1e-12);
}

TEST_CASE("embed is injective over all 16 specs") {
    const EmbeddingTable table = make_table(11);
    std::vector<Tensor> embeddings;
    for (int bits = 0; bits < 16; ++bits) {
        AttributeSpec spec;
        for (int a = 0; a < 4; ++a)
            if (bits & (1 << a)) spec.add(static_cast<Attribute>(a));
        embeddings.push_back(embed(spec, table).vector);
    }
    for (size_t i = 0; i < embeddings.size(); ++i) {
        for (size_t j = i + 1; j < embeddings.size(); ++j) {
            CHECK(l2_norm(sub(embeddings[i], embeddings[j])) > 1e-6);
        }
    }
}

TEST_CASE("prompt grammar") {
    CHECK(parse_prompt("neutral phantom").empty());
    CHECK(parse_prompt("  Neutral    PHANTOM ").empty());
    const AttributeSpec s = parse_prompt("phantom with device and effusion");
    CHECK(s == AttributeSpec{Attribute::Device, Attribute::Effusion});
    CHECK(parse_prompt("Phantom With Grid") == AttributeSpec{Attribute::Grid});

    CHECK_THROWS_AS(parse_prompt("phantom with lasers"), PromptParseError);
    CHECK_THROWS_AS(parse_prompt(""), PromptParseError);
    CHECK_THROWS_AS(parse_prompt("phantom with"), PromptParseError);
    CHECK_THROWS_AS(parse_prompt("phantom with device and"), PromptParseError);
    CHECK_THROWS_AS(parse_prompt("phantom with device device"), PromptParseError);
    CHECK_THROWS_AS(parse_prompt("phantom with device and device"), PromptParseError);
    CHECK_THROWS_AS(parse_prompt("neutral phantom with device"), PromptParseError);

    try {
        parse_prompt("phantom with lasers");
        FAIL("expected parse error");
    } catch (const PromptParseError& e) {
        CHECK(e.position == 13);
        CHECK(std::string(e.what()).find("lasers") != std::string::npos);
    }
}

TEST_CASE("format/parse round trip over all 16 specs") {
    for (int bits = 0; bits < 16; ++bits) {
        AttributeSpec spec;
        for (int a = 0; a < 4; ++a)
            if (bits & (1 << a)) spec.add(static_cast<Attribute>(a));
        CHECK(parse_prompt(format_prompt(spec)) == spec);
    }
}

} // TEST_SUITE
