#pragma once

#include <cstdint>
#include <vector>

namespace uclearn {

// Dense H x W x C image, channels interleaved, values in [0,1].
struct Image {
    int height = 0;
    int width = 0;
    int channels = 0;
    std::vector<float> data; // size height*width*channels, (h, w, c) order

    Image() = default;
    Image(int h, int w, int c) : height(h), width(w), channels(c), data(std::size_t(h) * w * c, 0.0f) {}

    float& at(int h, int w, int c) { return data[(std::size_t(h) * width + w) * channels + c]; }
    float at(int h, int w, int c) const { return data[(std::size_t(h) * width + w) * channels + c]; }

    std::size_t size() const { return data.size(); }

    bool same_shape(const Image& o) const {
        return height == o.height && width == o.width && channels == o.channels;
    }
};

inline float clampf(float v, float lo, float hi) { return v < lo ? lo : (v > hi ? hi : v); }

// round(pixel*255) as used by the on-disk format.
inline std::uint8_t quantize_byte(float v) {
    float x = clampf(v, 0.0f, 1.0f) * 255.0f;
    return static_cast<std::uint8_t>(x + 0.5f);
}

inline float dequantize_byte(std::uint8_t b) { return static_cast<float>(b) / 255.0f; }

// Snaps every pixel to the 8-bit grid (save/load round trip applied in place).
inline void quantize_image(Image& img) {
    for (float& v : img.data) v = dequantize_byte(quantize_byte(v));
}

} // namespace uclearn
