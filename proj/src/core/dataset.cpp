#include "core/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "core/errors.hpp"
#include "core/io_util.hpp"
#include "core/png_io.hpp"
#include "core/rng.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace uclearn {

namespace {

constexpr std::uint64_t kTestStream = 0x7e57u; // substream tag for held-out split

struct Rgb {
    float r, g, b;
};

Rgb hsv_to_rgb(float h, float s, float v) {
    h = h - std::floor(h);
    const float c = v * s;
    const float hp = h * 6.0f;
    const float x = c * (1.0f - std::fabs(std::fmod(hp, 2.0f) - 1.0f));
    float r = 0, g = 0, b = 0;
    if (hp < 1) { r = c; g = x; }
    else if (hp < 2) { r = x; g = c; }
    else if (hp < 3) { g = c; b = x; }
    else if (hp < 4) { g = x; b = c; }
    else if (hp < 5) { r = x; b = c; }
    else { r = c; b = x; }
    const float m = v - c;
    return {r + m, g + m, b + m};
}

// Category appearance is a pure function of (category, m): base color, accent
// color and primitive kind. Per-sample variation comes from the RNG stream.
struct CategoryStyle {
    Rgb base;
    Rgb accent;
    int kind;
};

CategoryStyle category_style(int category, int m) {
    const float hue = static_cast<float>(category) / static_cast<float>(m);
    CategoryStyle st;
    st.base = hsv_to_rgb(hue, 0.40f, 0.52f);
    st.accent = hsv_to_rgb(hue + 0.45f, 0.55f, 0.78f);
    st.kind = category % 8;
    return st;
}

void render_sample(Image& img, const CategoryStyle& st, Rng& rng) {
    const int side = img.height;
    const float fs = static_cast<float>(side);

    // Background: base color with a small per-sample color cast.
    const float cast_r = 0.035f * rng.normal_f();
    const float cast_g = 0.035f * rng.normal_f();
    const float cast_b = 0.035f * rng.normal_f();

    // Primitive placement jitter.
    const float cx = fs * (0.5f + 0.16f * (rng.uniform_f() - 0.5f) * 2.0f);
    const float cy = fs * (0.5f + 0.16f * (rng.uniform_f() - 0.5f) * 2.0f);
    const float radius = fs * (0.22f + 0.10f * rng.uniform_f());
    const float period = fs * (0.18f + 0.10f * rng.uniform_f());
    const float phase = rng.uniform_f() * period;
    const float amp = 0.38f + 0.10f * rng.uniform_f(); // blend weight of the accent

    for (int h = 0; h < side; ++h) {
        for (int w = 0; w < side; ++w) {
            const float x = static_cast<float>(w) + 0.5f;
            const float y = static_cast<float>(h) + 0.5f;
            const float dx = x - cx;
            const float dy = y - cy;
            bool inside = false;
            switch (st.kind) {
            case 0: // disc
                inside = dx * dx + dy * dy < radius * radius;
                break;
            case 1: // square
                inside = std::fabs(dx) < radius * 0.9f && std::fabs(dy) < radius * 0.9f;
                break;
            case 2: // horizontal stripes
                inside = std::fmod(y + phase, period) < period * 0.5f;
                break;
            case 3: // vertical stripes
                inside = std::fmod(x + phase, period) < period * 0.5f;
                break;
            case 4: // diagonal stripes
                inside = std::fmod(x + y + phase, period) < period * 0.5f;
                break;
            case 5: { // ring
                const float d = std::sqrt(dx * dx + dy * dy);
                inside = d > radius * 0.55f && d < radius;
                break;
            }
            case 6: // checkerboard
                inside = (static_cast<int>((x + phase) / (period * 0.5f)) +
                          static_cast<int>((y + phase) / (period * 0.5f))) % 2 == 0;
                break;
            default: // cross
                inside = std::fabs(dx) < radius * 0.30f || std::fabs(dy) < radius * 0.30f;
                break;
            }

            const float t = inside ? amp : 0.0f;
            float r = (1.0f - t) * st.base.r + t * st.accent.r + cast_r;
            float g = (1.0f - t) * st.base.g + t * st.accent.g + cast_g;
            float b = (1.0f - t) * st.base.b + t * st.accent.b + cast_b;
            img.at(h, w, 0) = r;
            img.at(h, w, 1) = g;
            img.at(h, w, 2) = b;
        }
    }

    // Per-pixel Gaussian texture, then clamp to [0,1].
    for (float& v : img.data) {
        v = clampf(v + 0.055f * rng.normal_f(), 0.0f, 1.0f);
    }
}

LabeledImageDataset synth_split(const SynthParams& p, int per_category, std::uint64_t stream_seed,
                                const char* split_tag) {
    if (p.num_categories < 2) throw_param("synth_blobs: num_categories must be >= 2");
    if (per_category < 1) throw_param("synth_blobs: per_category must be >= 1");
    if (p.side < 8) throw_param("synth_blobs: side must be >= 8");

    LabeledImageDataset ds;
    ds.num_categories = p.num_categories;
    ds.seed = p.seed;
    ds.name = "blobs-" + std::to_string(p.num_categories) + "x" + std::to_string(per_category) +
              "-" + split_tag;

    Rng rng(stream_seed);
    ds.samples.reserve(std::size_t(p.num_categories) * per_category);
    int index = 0;
    for (int c = 0; c < p.num_categories; ++c) {
        const CategoryStyle st = category_style(c, p.num_categories);
        for (int j = 0; j < per_category; ++j) {
            ImageSample s;
            s.pixels = Image(p.side, p.side, 3);
            s.label = c;
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%s-c%02d-%05d", split_tag, c, index++);
            s.id = buf;
            render_sample(s.pixels, st, rng);
            ds.samples.push_back(std::move(s));
        }
    }
    return ds;
}

} // namespace

LabeledImageDataset synth_blobs(const SynthParams& params) {
    return synth_split(params, params.per_category, params.seed, "tr");
}

LabeledImageDataset synth_blobs_test(const SynthParams& params, int per_category_test) {
    return synth_split(params, per_category_test, derive_seed(params.seed, kTestStream), "te");
}

void save_dataset(const LabeledImageDataset& ds, const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir / "images", ec);
    if (ec) throw_io("cannot create dataset directory: " + dir.string());

    json manifest;
    manifest["name"] = ds.name;
    manifest["num_categories"] = ds.num_categories;
    manifest["seed"] = ds.seed;
    json samples = json::array();
    for (const auto& s : ds.samples) {
        const std::string file = "images/" + s.id + ".png";
        write_png_rgb8(dir / file, s.pixels);
        samples.push_back({{"id", s.id}, {"file", file}, {"label", s.label}});
    }
    manifest["samples"] = std::move(samples);
    // Manifest written last: its presence marks a complete dataset.
    atomic_write_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

LabeledImageDataset load_dataset(const fs::path& dir) {
    const fs::path manifest_path = dir / "manifest.json";
    if (!fs::exists(manifest_path)) throw_format("missing manifest: " + manifest_path.string());

    json manifest;
    try {
        manifest = json::parse(read_text_file(manifest_path));
    } catch (const json::exception& e) {
        throw_format("corrupt manifest " + manifest_path.string() + ": " + e.what());
    }

    LabeledImageDataset ds;
    try {
        ds.name = manifest.at("name").get<std::string>();
        ds.num_categories = manifest.at("num_categories").get<int>();
        ds.seed = manifest.at("seed").get<std::uint64_t>();
        for (const auto& entry : manifest.at("samples")) {
            ImageSample s;
            s.id = entry.at("id").get<std::string>();
            s.label = entry.at("label").get<int>();
            const std::string file = entry.at("file").get<std::string>();
            const fs::path img_path = dir / file;
            if (!fs::exists(img_path)) {
                throw_format("sample '" + s.id + "': missing image file " + img_path.string());
            }
            s.pixels = read_png_rgb8(img_path);
            ds.samples.push_back(std::move(s));
        }
    } catch (const json::exception& e) {
        throw_format("invalid manifest " + manifest_path.string() + ": " + e.what());
    }

    if (!ds.samples.empty()) {
        const Image& first = ds.samples.front().pixels;
        for (const auto& s : ds.samples) {
            if (!s.pixels.same_shape(first)) {
                throw_format("sample '" + s.id + "': image shape mismatch");
            }
        }
    }
    validate_dataset(ds);
    return ds;
}

void validate_dataset(const LabeledImageDataset& ds) {
    if (ds.num_categories < 1) throw_format("dataset '" + ds.name + "': num_categories must be >= 1");
    std::unordered_set<std::string> seen;
    seen.reserve(ds.samples.size());
    for (const auto& s : ds.samples) {
        if (!seen.insert(s.id).second) throw_format("duplicate sample id '" + s.id + "'");
        if (s.label < 0 || s.label >= ds.num_categories) {
            throw_format("sample '" + s.id + "': label " + std::to_string(s.label) +
                         " outside [0, " + std::to_string(ds.num_categories) + ")");
        }
        if (s.pixels.channels != 3) throw_format("sample '" + s.id + "': expected 3 channels");
        for (float v : s.pixels.data) {
            if (!(v >= 0.0f && v <= 1.0f)) {
                throw_format("sample '" + s.id + "': pixel value outside [0,1]");
            }
        }
    }
}

LabelMapping make_grouping(int m, int n, std::uint64_t seed) {
    if (n < 1 || n > m) throw_param("make_grouping: need 1 <= n <= m");
    LabelMapping mapping;
    mapping.source_categories = m;
    mapping.target_categories = n;
    mapping.table.assign(m, 0);
    if (n == m) {
        // Identity keeps n = m relabeling an exact no-op.
        for (int i = 0; i < m; ++i) mapping.table[i] = i;
        return mapping;
    }
    std::vector<int> order(m);
    for (int i = 0; i < m; ++i) order[i] = i;
    Rng rng(seed);
    rng.shuffle(order);
    // First (m mod n) groups take ceil(m/n), the rest floor(m/n).
    const int base = m / n;
    const int extra = m % n;
    int pos = 0;
    for (int g = 0; g < n; ++g) {
        const int size = base + (g < extra ? 1 : 0);
        for (int j = 0; j < size; ++j) mapping.table[order[pos++]] = g;
    }
    return mapping;
}

LabeledImageDataset relabel(const LabeledImageDataset& ds, const LabelMapping& mapping) {
    if (mapping.source_categories != ds.num_categories) {
        throw_param("relabel: mapping covers " + std::to_string(mapping.source_categories) +
                    " categories, dataset has " + std::to_string(ds.num_categories));
    }
    if (static_cast<int>(mapping.table.size()) != mapping.source_categories) {
        throw_param("relabel: mapping table length mismatch");
    }
    std::vector<bool> hit(mapping.target_categories, false);
    for (int t : mapping.table) {
        if (t < 0 || t >= mapping.target_categories) throw_param("relabel: target label out of range");
        hit[t] = true;
    }
    for (bool h : hit) {
        if (!h) throw_param("relabel: mapping is not surjective");
    }

    LabeledImageDataset out = ds;
    out.num_categories = mapping.target_categories;
    out.name = ds.name + "-relabel" + std::to_string(mapping.target_categories);
    for (auto& s : out.samples) s.label = mapping.table[s.label];
    return out;
}

LabeledImageDataset mix_datasets(const LabeledImageDataset& clean, const LabeledImageDataset& protected_ds,
                                 const std::set<int>& clean_categories) {
    if (clean.num_categories != protected_ds.num_categories ||
        clean.size() != protected_ds.size()) {
        throw_param("mix_datasets: datasets disagree in size or category count");
    }
    LabeledImageDataset out = clean;
    out.name = clean.name + "-mixed";
    for (std::size_t i = 0; i < clean.size(); ++i) {
        const auto& c = clean.samples[i];
        const auto& p = protected_ds.samples[i];
        if (c.id != p.id || c.label != p.label) {
            throw_param("mix_datasets: id/label mismatch at index " + std::to_string(i) +
                        " ('" + c.id + "' vs '" + p.id + "')");
        }
        if (!clean_categories.count(c.label)) out.samples[i].pixels = p.pixels;
    }
    return out;
}

LabeledImageDataset subset_by_categories(const LabeledImageDataset& ds, const std::set<int>& categories) {
    LabeledImageDataset out;
    out.num_categories = ds.num_categories;
    out.seed = ds.seed;
    out.name = ds.name + "-subset";
    for (const auto& s : ds.samples) {
        if (categories.count(s.label)) out.samples.push_back(s);
    }
    return out;
}

} // namespace uclearn
