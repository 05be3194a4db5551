#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "latlab/attributes.hpp"
#include "latlab/tensor.hpp"

namespace latlab {

inline constexpr int kImageSize = 32;
inline constexpr int kImagePixels = kImageSize * kImageSize;

/// Identity of a phantom: where the body sits and how it is shaped. Two
/// phantoms with equal content render identical attribute-free images.
struct ContentParams {
    double body_cx = 0.5, body_cy = 0.5;   // [0.35, 0.65]
    double body_ax = 0.3, body_ay = 0.3;   // [0.25, 0.35]
    double lung_offset = 0.11;             // [0.08, 0.14]
    uint64_t identity_seed = 0;

    void validate() const;
};

/// Presence and strength of each overlay. Severity is defined exactly for
/// attributes that are present and lies in [0.5, 1.0].
struct AttributeFlags {
    std::array<bool, kAttributeCount> present{};
    std::array<double, kAttributeCount> severity{};

    bool has(Attribute a) const { return present[static_cast<size_t>(a)]; }
    double severity_of(Attribute a) const { return severity[static_cast<size_t>(a)]; }
    void set(Attribute a, double sev);
    void clear(Attribute a);
    void validate() const;
};

struct Phantom {
    Tensor image;   // 32x32 in [-1, 1]
    ContentParams content;
    AttributeFlags attrs;
};

struct Dataset {
    std::vector<Phantom> items;
    std::string split;   // train / val / test
    uint64_t seed = 0;
};

/// Deterministic renderer: anatomy from content, additive attribute overlays
/// each confined to its region mask, final clamp to [-1, 1].
Tensor render_phantom(const ContentParams& content, const AttributeFlags& attrs);

/// Region an attribute's renderer may touch, as a 32x32 0/1 mask. Depends on
/// content only, never on severity or on other attributes.
std::vector<uint8_t> attribute_mask(const ContentParams& content, Attribute a);

/// Surrogate content label: quadrant of the body center (>= 0.5 goes right/down).
int content_quadrant(const ContentParams& content);

Dataset sample_dataset(int64_t n, uint64_t seed, const std::map<Attribute, double>& attr_probs,
                       const std::string& split = "train");

/// PGM (P5, 8-bit) plus a JSON index of per-sample params and flags.
void export_dataset(const Dataset& ds, const std::string& dir);
void write_pgm(const Tensor& image, const std::string& path);

} // namespace latlab
