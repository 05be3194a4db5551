#include "latlab/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "latlab/rng.hpp"

namespace latlab {

const std::array<Attribute, kAttributeCount>& all_attributes() {
    static const std::array<Attribute, kAttributeCount> a = {Attribute::Effusion, Attribute::Device,
                                                             Attribute::Marker, Attribute::Grid};
    return a;
}

const std::string& attribute_name(Attribute a) {
    static const std::array<std::string, kAttributeCount> names = {"effusion", "device", "marker", "grid"};
    return names[static_cast<size_t>(a)];
}

bool attribute_from_name(const std::string& name, Attribute& out) {
    for (Attribute a : all_attributes()) {
        if (attribute_name(a) == name) {
            out = a;
            return true;
        }
    }
    return false;
}

AttributeSpec::AttributeSpec(std::initializer_list<Attribute> attrs) {
    for (Attribute a : attrs) add(a);
}

int AttributeSpec::count() const {
    int n = 0;
    for (Attribute a : all_attributes())
        if (contains(a)) ++n;
    return n;
}

std::vector<Attribute> AttributeSpec::attributes() const {
    std::vector<Attribute> out;
    for (Attribute a : all_attributes())
        if (contains(a)) out.push_back(a);
    return out;
}

static void check_range(double v, double lo, double hi, const char* field) {
    if (!(v >= lo && v <= hi)) {
        throw std::invalid_argument(std::string(field) + " = " + std::to_string(v) + " outside [" +
                                    std::to_string(lo) + ", " + std::to_string(hi) + "]");
    }
}

void ContentParams::validate() const {
    check_range(body_cx, 0.35, 0.65, "body_cx");
    check_range(body_cy, 0.35, 0.65, "body_cy");
    check_range(body_ax, 0.25, 0.35, "body_ax");
    check_range(body_ay, 0.25, 0.35, "body_ay");
    check_range(lung_offset, 0.08, 0.14, "lung_offset");
}

void AttributeFlags::set(Attribute a, double sev) {
    present[static_cast<size_t>(a)] = true;
    severity[static_cast<size_t>(a)] = sev;
}

void AttributeFlags::clear(Attribute a) {
    present[static_cast<size_t>(a)] = false;
    severity[static_cast<size_t>(a)] = 0.0;
}

void AttributeFlags::validate() const {
    for (Attribute a : all_attributes()) {
        if (has(a)) check_range(severity_of(a), 0.5, 1.0, attribute_name(a).c_str());
    }
}

// Pixel centers in normalized [0,1] coordinates.
static inline double px(int col) { return (col + 0.5) / kImageSize; }
static inline double py(int row) { return (row + 0.5) / kImageSize; }

static inline bool in_ellipse(double x, double y, double cx, double cy, double ax, double ay) {
    const double dx = (x - cx) / ax;
    const double dy = (y - cy) / ay;
    return dx * dx + dy * dy <= 1.0;
}

// Lung geometry relative to the body ellipse.
static inline double lung_ax(const ContentParams& c) { return 0.40 * c.body_ax; }
static inline double lung_ay(const ContentParams& c) { return 0.60 * c.body_ay; }

static Tensor render_base(const ContentParams& c) {
    Tensor img = Tensor::full({kImageSize, kImageSize}, -1.0);
    // Smooth shading keyed to the identity seed, applied inside the body.
    RngStream shade = make_rng(c.identity_seed, 0xB0D15AD1ULL);
    const double fx = 0.5 + shade.next_uniform();
    const double fy = 0.5 + shade.next_uniform();
    const double phase = shade.next_uniform() * 2.0 * M_PI;

    const double lax = lung_ax(c), lay = lung_ay(c);
    for (int r = 0; r < kImageSize; ++r) {
        for (int col = 0; col < kImageSize; ++col) {
            const double x = px(col), y = py(r);
            if (!in_ellipse(x, y, c.body_cx, c.body_cy, c.body_ax, c.body_ay)) continue;
            double v = -0.2;
            if (in_ellipse(x, y, c.body_cx - c.lung_offset, c.body_cy, lax, lay) ||
                in_ellipse(x, y, c.body_cx + c.lung_offset, c.body_cy, lax, lay)) {
                v = -0.7;
            }
            v += 0.06 * std::sin(2.0 * M_PI * (fx * x + fy * y) + phase);
            img.at2(r, col) = v;
        }
    }
    return img;
}

// Bresenham rasterization of a 1 px segment into the hit mask.
static void raster_segment(std::vector<uint8_t>& mask, int r0, int c0, int r1, int c1) {
    int dr = std::abs(r1 - r0), dc = std::abs(c1 - c0);
    const int sr = r0 < r1 ? 1 : -1, sc = c0 < c1 ? 1 : -1;
    int err = dc - dr;
    int r = r0, c = c0;
    while (true) {
        if (r >= 0 && r < kImageSize && c >= 0 && c < kImageSize) mask[r * kImageSize + c] = 1;
        if (r == r1 && c == c1) break;
        const int e2 = 2 * err;
        if (e2 > -dr) {
            err -= dr;
            c += sc;
        }
        if (e2 < dc) {
            err += dc;
            r += sr;
        }
    }
}

static inline int to_col(double x) { return std::clamp(static_cast<int>(std::floor(x * kImageSize)), 0, kImageSize - 1); }
static inline int to_row(double y) { return std::clamp(static_cast<int>(std::floor(y * kImageSize)), 0, kImageSize - 1); }

// Device polyline: three segments crossing the torso, vertical wiggle keyed
// to the identity seed.
static std::vector<uint8_t> device_mask(const ContentParams& c) {
    std::vector<uint8_t> mask(kImagePixels, 0);
    RngStream geom = make_rng(c.identity_seed, 0xDE71CEULL);
    double ys[4];
    for (double& y : ys) y = c.body_cy + (geom.next_uniform() - 0.5) * 0.9 * c.body_ay;
    const double xs[4] = {c.body_cx - c.body_ax, c.body_cx - c.body_ax / 3.0,
                          c.body_cx + c.body_ax / 3.0, c.body_cx + c.body_ax};
    for (int s = 0; s < 3; ++s) {
        raster_segment(mask, to_row(ys[s]), to_col(xs[s]), to_row(ys[s + 1]), to_col(xs[s + 1]));
    }
    return mask;
}

std::vector<uint8_t> attribute_mask(const ContentParams& c, Attribute a) {
    std::vector<uint8_t> mask(kImagePixels, 0);
    const double lax = lung_ax(c), lay = lung_ay(c);
    switch (a) {
    case Attribute::Effusion: {
        const double y0 = c.body_cy + lay / 3.0;
        for (int r = 0; r < kImageSize; ++r) {
            for (int col = 0; col < kImageSize; ++col) {
                const double x = px(col), y = py(r);
                if (y < y0) continue;
                if (in_ellipse(x, y, c.body_cx - c.lung_offset, c.body_cy, lax, lay) ||
                    in_ellipse(x, y, c.body_cx + c.lung_offset, c.body_cy, lax, lay)) {
                    mask[r * kImageSize + col] = 1;
                }
            }
        }
        break;
    }
    case Attribute::Device:
        return device_mask(c);
    case Attribute::Marker: {
        const double mx = c.body_cx + c.body_ax * M_SQRT1_2;
        const double my = c.body_cy - c.body_ay * M_SQRT1_2;
        const int mc = to_col(mx), mr = to_row(my);
        for (int r = 0; r < kImageSize; ++r) {
            for (int col = 0; col < kImageSize; ++col) {
                const int dr = r - mr, dc = col - mc;
                if (dr * dr + dc * dc <= 4) mask[r * kImageSize + col] = 1;
            }
        }
        break;
    }
    case Attribute::Grid:
        for (int col = 1; col < kImageSize / 4; col += 4)
            for (int r = 0; r < kImageSize; ++r) mask[r * kImageSize + col] = 1;
        break;
    }
    return mask;
}

// Additive edit for one attribute; nonzero only inside attribute_mask.
static void add_attribute_delta(Tensor& delta, const ContentParams& c, Attribute a, double sev) {
    const std::vector<uint8_t> mask = attribute_mask(c, a);
    switch (a) {
    case Attribute::Effusion: {
        const double lay = lung_ay(c);
        const double y0 = c.body_cy + lay / 3.0;
        const double y1 = c.body_cy + lay;
        for (int r = 0; r < kImageSize; ++r) {
            for (int col = 0; col < kImageSize; ++col) {
                if (!mask[r * kImageSize + col]) continue;
                const double ramp = std::clamp((py(r) - y0) / (y1 - y0), 0.0, 1.0);
                delta.at2(r, col) += sev * 0.8 * ramp;
            }
        }
        break;
    }
    case Attribute::Device:
    case Attribute::Marker: {
        for (int i = 0; i < kImagePixels; ++i)
            if (mask[static_cast<size_t>(i)]) delta[i] += sev * 0.9;
        break;
    }
    case Attribute::Grid: {
        for (int i = 0; i < kImagePixels; ++i)
            if (mask[static_cast<size_t>(i)]) delta[i] += sev * 0.5;
        break;
    }
    }
}

Tensor render_phantom(const ContentParams& content, const AttributeFlags& attrs) {
    content.validate();
    attrs.validate();
    Tensor img = render_base(content);
    Tensor delta = Tensor::zeros({kImageSize, kImageSize});
    for (Attribute a : all_attributes()) {
        if (attrs.has(a)) add_attribute_delta(delta, content, a, attrs.severity_of(a));
    }
    img = clamp(add(img, delta), -1.0, 1.0);
    require_finite(img, "render_phantom");
    return img;
}

int content_quadrant(const ContentParams& content) {
    check_range(content.body_cx, 0.35, 0.65, "body_cx");
    check_range(content.body_cy, 0.35, 0.65, "body_cy");
    const bool right = content.body_cx >= 0.5;
    const bool down = content.body_cy >= 0.5;
    return (down ? 2 : 0) + (right ? 1 : 0);
}

static uint64_t split_offset(const std::string& split) {
    if (split == "train") return 0;
    if (split == "val") return 1;
    if (split == "test") return 2;
    throw std::invalid_argument("unknown split '" + split + "' (expected train/val/test)");
}

Dataset sample_dataset(int64_t n, uint64_t seed, const std::map<Attribute, double>& attr_probs,
                       const std::string& split) {
    if (n < 1) throw std::invalid_argument("sample_dataset: n must be >= 1");
    for (const auto& [a, p] : attr_probs) {
        if (!(p >= 0.0 && p <= 1.0))
            throw std::invalid_argument("attr_probs[" + attribute_name(a) + "] outside [0,1]");
    }
    const uint64_t base = split_offset(split) << 32;
    Dataset ds;
    ds.split = split;
    ds.seed = seed;
    ds.items.reserve(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; ++i) {
        RngStream rng = make_rng(seed, base + static_cast<uint64_t>(i));
        Phantom ph;
        ph.content.body_cx = 0.35 + 0.30 * rng.next_uniform();
        ph.content.body_cy = 0.35 + 0.30 * rng.next_uniform();
        ph.content.body_ax = 0.25 + 0.10 * rng.next_uniform();
        ph.content.body_ay = 0.25 + 0.10 * rng.next_uniform();
        ph.content.lung_offset = 0.08 + 0.06 * rng.next_uniform();
        ph.content.identity_seed = rng.next_u64();
        for (Attribute a : all_attributes()) {
            auto it = attr_probs.find(a);
            const double p = (it == attr_probs.end()) ? 0.0 : it->second;
            if (rng.next_uniform() < p) ph.attrs.set(a, 0.5 + 0.5 * rng.next_uniform());
        }
        ph.image = render_phantom(ph.content, ph.attrs);
        ds.items.push_back(std::move(ph));
    }
    return ds;
}

void write_pgm(const Tensor& image, const std::string& path) {
    if (image.rank() != 2 || image.rows() != kImageSize || image.cols() != kImageSize) {
        throw std::invalid_argument("write_pgm: expected 32x32 image");
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_pgm: cannot open " + path);
    out << "P5\n" << kImageSize << " " << kImageSize << "\n255\n";
    for (int64_t i = 0; i < image.size(); ++i) {
        const double v = std::clamp((image[i] + 1.0) / 2.0 * 255.0, 0.0, 255.0);
        const unsigned char b = static_cast<unsigned char>(std::lround(v));
        out.write(reinterpret_cast<const char*>(&b), 1);
    }
}

void export_dataset(const Dataset& ds, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    nlohmann::json index;
    index["split"] = ds.split;
    index["seed"] = ds.seed;
    index["count"] = ds.items.size();
    nlohmann::json items = nlohmann::json::array();
    char name[32];
    for (size_t i = 0; i < ds.items.size(); ++i) {
        const Phantom& ph = ds.items[i];
        std::snprintf(name, sizeof(name), "%05zu.pgm", i);
        write_pgm(ph.image, (fs::path(dir) / name).string());
        nlohmann::json j;
        j["file"] = name;
        j["content"] = {{"body_cx", ph.content.body_cx}, {"body_cy", ph.content.body_cy},
                        {"body_ax", ph.content.body_ax}, {"body_ay", ph.content.body_ay},
                        {"lung_offset", ph.content.lung_offset},
                        {"identity_seed", ph.content.identity_seed}};
        nlohmann::json attrs;
        nlohmann::json severity;
        for (Attribute a : all_attributes()) {
            attrs[attribute_name(a)] = ph.attrs.has(a);
            if (ph.attrs.has(a)) severity[attribute_name(a)] = ph.attrs.severity_of(a);
        }
        j["attrs"] = attrs;
        j["severity"] = severity;
        j["quadrant"] = content_quadrant(ph.content);
        items.push_back(std::move(j));
    }
    index["items"] = std::move(items);
    std::ofstream out(fs::path(dir) / "index.json");
    if (!out) throw std::runtime_error("export_dataset: cannot write index.json in " + dir);
    out << index.dump(2) << "\n";
}

} // namespace latlab
