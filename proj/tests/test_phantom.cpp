#include <doctest.h>

#include <stdexcept>

#include <filesystem>

#include "latlab/io_util.hpp"
#include "latlab/phantom.hpp"

using namespace latlab;

namespace {

ContentParams mid_content(uint64_t id = 42) {
    ContentParams c;
    c.body_cx = 0.5;
    c.body_cy = 0.52;
    c.body_ax = 0.3;
    c.body_ay = 0.32;
    c.lung_offset = 0.12;
    c.identity_seed = id;
    return c;
}

} // namespace

TEST_SUITE("synth_data") {

TEST_CASE("rendering is deterministic and in range") {
    AttributeFlags attrs;
    attrs.set(Attribute::Device, 0.8);
    const Tensor a = render_phantom(mid_content(), attrs);
    const Tensor b = render_phantom(mid_content(), attrs);
    CHECK(max_abs_diff(a, b) == 0.0);
    for (int64_t i = 0; i < a.size(); ++i) {
        CHECK(a[i] >= -1.0);
        CHECK(a[i] <= 1.0);
    }
}

TEST_CASE("out-of-range parameters are rejected") {
    ContentParams c = mid_content();
    c.body_cx = 0.7;
    CHECK_THROWS_AS(render_phantom(c, {}), std::invalid_argument);
    AttributeFlags attrs;
    attrs.set(Attribute::Grid, 0.3);   // below the severity floor
    CHECK_THROWS_AS(render_phantom(mid_content(), attrs), std::invalid_argument);
}

TEST_CASE("attribute edits stay inside their region masks") {
    const ContentParams content = mid_content(7);
    const Tensor base = render_phantom(content, {});
    for (Attribute a : all_attributes()) {
        AttributeFlags attrs;
        attrs.set(a, 1.0);
        const Tensor edited = render_phantom(content, attrs);
        const auto mask = attribute_mask(content, a);
        for (int64_t i = 0; i < base.size(); ++i) {
            if (!mask[static_cast<size_t>(i)]) {
                CHECK(edited[i] == base[i]);
            }
        }
        // The edit must actually do something.
        CHECK(max_abs_diff(edited, base) > 0.0);
    }
}

TEST_CASE("attribute composition is order-independent") {
    const ContentParams content = mid_content(9);
    AttributeFlags ab;
    ab.set(Attribute::Effusion, 0.9);
    ab.set(Attribute::Device, 0.7);
    const Tensor both = render_phantom(content, ab);

    // Apply the additive edits manually in both orders, clamping once.
    const Tensor base = render_phantom(content, {});
    AttributeFlags only_a;
    only_a.set(Attribute::Effusion, 0.9);
    AttributeFlags only_b;
    only_b.set(Attribute::Device, 0.7);
    const Tensor da = sub(render_phantom(content, only_a), base);
    const Tensor db = sub(render_phantom(content, only_b), base);
    const Tensor order1 = clamp(add(add(base, da), db), -1.0, 1.0);
    const Tensor order2 = clamp(add(add(base, db), da), -1.0, 1.0);
    CHECK(max_abs_diff(order1, order2) == 0.0);
    CHECK(max_abs_diff(both, order1) < 1e-12);
}

TEST_CASE("effusion brightens the image") {
    const ContentParams content = mid_content(10);
    AttributeFlags attrs;
    attrs.set(Attribute::Effusion, 1.0);
    const Tensor plain = render_phantom(content, {});
    const Tensor wet = render_phantom(content, attrs);
    double mean_plain = 0.0, mean_wet = 0.0;
    for (int64_t i = 0; i < plain.size(); ++i) {
        mean_plain += plain[i];
        mean_wet += wet[i];
    }
    CHECK(mean_wet > mean_plain);
}

TEST_CASE("content quadrant definition") {
    ContentParams c = mid_content();
    c.body_cx = 0.40;
    c.body_cy = 0.40;
    CHECK(content_quadrant(c) == 0);
    c.body_cx = 0.60;
    CHECK(content_quadrant(c) == 1);
    c.body_cx = 0.40;
    c.body_cy = 0.60;
    CHECK(content_quadrant(c) == 2);
    c.body_cx = 0.50;
    c.body_cy = 0.50;
    CHECK(content_quadrant(c) == 3);
}

TEST_CASE("dataset sampling: determinism, probabilities, split disjointness") {
    std::map<Attribute, double> probs = {{Attribute::Device, 0.5}};
    const Dataset d1 = sample_dataset(1000, 77, probs);
    const Dataset d2 = sample_dataset(1000, 77, probs);
    REQUIRE(d1.items.size() == 1000);
    int64_t device_count = 0;
    for (size_t i = 0; i < d1.items.size(); ++i) {
        CHECK(max_abs_diff(d1.items[i].image, d2.items[i].image) == 0.0);
        if (d1.items[i].attrs.has(Attribute::Device)) ++device_count;
        CHECK_FALSE(d1.items[i].attrs.has(Attribute::Grid));
    }
    // Binomial(1000, 0.5) lies in [440, 560] at the 99.9% level.
    CHECK(device_count >= 440);
    CHECK(device_count <= 560);

    const Dataset val = sample_dataset(10, 77, probs, "val");
    CHECK(max_abs_diff(val.items[0].image, d1.items[0].image) > 0.0);

    const Dataset none = sample_dataset(5, 1, {});
    for (const auto& ph : none.items) {
        for (Attribute a : all_attributes()) CHECK_FALSE(ph.attrs.has(a));
    }
    CHECK_THROWS_AS(sample_dataset(0, 1, {}), std::invalid_argument);
    CHECK_THROWS_AS(sample_dataset(1, 1, {{Attribute::Device, 1.5}}), std::invalid_argument);
    CHECK_THROWS_AS(sample_dataset(1, 1, {}, "holdout"), std::invalid_argument);
}

TEST_CASE("dataset export round trip is byte-stable") {
    namespace fs = std::filesystem;
    const Dataset ds = sample_dataset(6, 5, {{Attribute::Marker, 0.5}}, "test");
    const std::string dir1 = (fs::temp_directory_path() / "latlab_ds1").string();
    const std::string dir2 = (fs::temp_directory_path() / "latlab_ds2").string();
    fs::remove_all(dir1);
    fs::remove_all(dir2);
    export_dataset(ds, dir1);
    export_dataset(ds, dir2);
    CHECK(fs::exists(fs::path(dir1) / "index.json"));
    CHECK(fs::exists(fs::path(dir1) / "00000.pgm"));
    CHECK(file_hash((fs::path(dir1) / "index.json").string()) ==
          file_hash((fs::path(dir2) / "index.json").string()));
    CHECK(file_hash((fs::path(dir1) / "00003.pgm").string()) ==
          file_hash((fs::path(dir2) / "00003.pgm").string()));
    fs::remove_all(dir1);
    fs::remove_all(dir2);
}

} // TEST_SUITE
