#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>

#include "latlab/attributes.hpp"
#include "latlab/tensor.hpp"

namespace latlab {

inline constexpr int kEmbeddingDim = 16;

/// Prompt vector e fed to the denoiser.
struct Embedding {
    Tensor vector;   // [16]
};

/// Fixed stand-in for a text encoder: a base vector plus one unit token
/// vector per attribute, token pairs separated to |cos| <= 0.5.
struct EmbeddingTable {
    Tensor base;                                  // [16]
    std::array<Tensor, kAttributeCount> tokens;   // each [16], unit norm
    uint64_t seed = 0;
};

struct PromptParseError : std::runtime_error {
    PromptParseError(const std::string& msg, size_t pos);
    size_t position;
};

EmbeddingTable make_table(uint64_t seed);

/// base + sum of the spec's token vectors, summed in canonical order.
Embedding embed(const AttributeSpec& spec, const EmbeddingTable& table);

/// Grammar: "neutral phantom" | "phantom with <attr> (and <attr>)*".
/// Case-insensitive, whitespace-tolerant.
AttributeSpec parse_prompt(const std::string& text);
std::string format_prompt(const AttributeSpec& spec);

} // namespace latlab
