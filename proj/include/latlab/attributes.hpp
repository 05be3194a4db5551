#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace latlab {

/// The four manipulable style attributes. Effusion is the disease-like
/// overlay; device, marker and grid are acquisition-artifact-like.
enum class Attribute : int {
    Effusion = 0,
    Device = 1,
    Marker = 2,
    Grid = 3,
};

inline constexpr int kAttributeCount = 4;

const std::array<Attribute, kAttributeCount>& all_attributes();
const std::string& attribute_name(Attribute a);
/// Returns true and sets `out` when `name` (lowercase) is a known attribute.
bool attribute_from_name(const std::string& name, Attribute& out);

/// Set of attributes mentioned by a prompt; stored canonically so identical
/// sets compare and embed identically regardless of listing order.
class AttributeSpec {
public:
    AttributeSpec() = default;
    explicit AttributeSpec(std::initializer_list<Attribute> attrs);

    void add(Attribute a) { bits_ |= mask(a); }
    bool contains(Attribute a) const { return bits_ & mask(a); }
    bool empty() const { return bits_ == 0; }
    int count() const;
    /// Members in canonical (ascending enum) order.
    std::vector<Attribute> attributes() const;

    bool operator==(const AttributeSpec& o) const = default;

private:
    static uint8_t mask(Attribute a) { return static_cast<uint8_t>(1u << static_cast<int>(a)); }
    uint8_t bits_ = 0;
};

} // namespace latlab
