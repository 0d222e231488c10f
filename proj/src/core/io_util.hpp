#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace uclearn {

// Writes bytes to a temp file in the same directory, then renames over the
// target. Readers never observe partial artifacts.
void atomic_write_file(const std::filesystem::path& path, const void* data, std::size_t size);
void atomic_write_file(const std::filesystem::path& path, const std::string& text);

std::string read_text_file(const std::filesystem::path& path);
std::vector<std::uint8_t> read_binary_file(const std::filesystem::path& path);

// Little-endian scalar append/read helpers for the binary containers.
class ByteWriter {
public:
    void u16(std::uint16_t v);
    void u32(std::uint32_t v);
    void f32(float v);
    void raw(const void* data, std::size_t size);
    void f32_array(const float* data, std::size_t count);

    const std::vector<std::uint8_t>& bytes() const { return buf_; }

private:
    std::vector<std::uint8_t> buf_;
};

class ByteReader {
public:
    ByteReader(const std::uint8_t* data, std::size_t size) : data_(data), size_(size) {}
    explicit ByteReader(const std::vector<std::uint8_t>& v) : data_(v.data()), size_(v.size()) {}

    std::uint16_t u16();
    std::uint32_t u32();
    float f32();
    void f32_array(float* out, std::size_t count);
    void raw(void* out, std::size_t size);
    std::size_t remaining() const { return size_ - pos_; }
    std::size_t pos() const { return pos_; }

private:
    void need(std::size_t n);
    const std::uint8_t* data_;
    std::size_t size_;
    std::size_t pos_ = 0;
};

} // namespace uclearn
