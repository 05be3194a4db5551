#include "latlab/prompting.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "latlab/rng.hpp"

namespace latlab {

PromptParseError::PromptParseError(const std::string& msg, size_t pos)
    : std::runtime_error(msg + " at position " + std::to_string(pos)), position(pos) {}

static Tensor draw_vector(RngStream& rng) {
    Tensor v({kEmbeddingDim});
    for (int i = 0; i < kEmbeddingDim; ++i) v[i] = rng.next_normal();
    return v;
}

EmbeddingTable make_table(uint64_t seed) {
    EmbeddingTable table;
    table.seed = seed;
    RngStream rng = make_rng(seed, 0x7AB1EULL);
    table.base = draw_vector(rng);
    for (int k = 0; k < kAttributeCount; ++k) {
        bool accepted = false;
        for (int attempt = 0; attempt < 1000 && !accepted; ++attempt) {
            Tensor v = draw_vector(rng);
            const double n = l2_norm(v);
            if (n < 1e-8) continue;
            v = scale(v, 1.0 / n);
            accepted = true;
            for (int j = 0; j < k; ++j) {
                if (std::abs(dot(v, table.tokens[static_cast<size_t>(j)])) > 0.5) {
                    accepted = false;
                    break;
                }
            }
            if (accepted) table.tokens[static_cast<size_t>(k)] = std::move(v);
        }
        if (!accepted) {
            throw std::runtime_error("make_table: token separation failed after 1000 attempts for '" +
                                     attribute_name(static_cast<Attribute>(k)) + "'");
        }
    }
    return table;
}

Embedding embed(const AttributeSpec& spec, const EmbeddingTable& table) {
    Tensor v = table.base;
    for (Attribute a : spec.attributes()) v = add(v, table.tokens[static_cast<size_t>(a)]);
    require_finite(v, "embed");
    return Embedding{std::move(v)};
}

namespace {
struct Token {
    std::string text;
    size_t pos;
};

std::vector<Token> tokenize_lower(const std::string& text) {
    std::vector<Token> tokens;
    size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        if (i >= text.size()) break;
        const size_t start = i;
        std::string word;
        while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) {
            word.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(text[i]))));
            ++i;
        }
        tokens.push_back(Token{std::move(word), start});
    }
    return tokens;
}
} // namespace

AttributeSpec parse_prompt(const std::string& text) {
    const auto tokens = tokenize_lower(text);
    if (tokens.empty()) throw PromptParseError("empty prompt", 0);

    size_t i = 0;
    const auto expect = [&](const std::string& word) {
        if (i >= tokens.size()) throw PromptParseError("expected '" + word + "'", text.size());
        if (tokens[i].text != word)
            throw PromptParseError("expected '" + word + "', got '" + tokens[i].text + "'", tokens[i].pos);
        ++i;
    };

    if (tokens[0].text == "neutral") {
        ++i;
        expect("phantom");
        if (i != tokens.size())
            throw PromptParseError("unexpected token '" + tokens[i].text + "'", tokens[i].pos);
        return AttributeSpec{};
    }

    expect("phantom");
    expect("with");
    AttributeSpec spec;
    while (true) {
        if (i >= tokens.size()) throw PromptParseError("expected attribute name", text.size());
        Attribute a;
        if (!attribute_from_name(tokens[i].text, a))
            throw PromptParseError("unknown attribute '" + tokens[i].text + "'", tokens[i].pos);
        if (spec.contains(a))
            throw PromptParseError("duplicate attribute '" + tokens[i].text + "'", tokens[i].pos);
        spec.add(a);
        ++i;
        if (i == tokens.size()) break;
        expect("and");
    }
    return spec;
}

std::string format_prompt(const AttributeSpec& spec) {
    if (spec.empty()) return "neutral phantom";
    std::string out = "phantom with ";
    const auto attrs = spec.attributes();
    for (size_t i = 0; i < attrs.size(); ++i) {
        if (i) out += " and ";
        out += attribute_name(attrs[i]);
    }
    return out;
}

} // namespace latlab
