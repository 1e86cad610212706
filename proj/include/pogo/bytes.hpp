#ifndef POGO_BYTES_HPP
#define POGO_BYTES_HPP

#include <cstdint>
#include <cstring>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace pogo {

using Bytes = std::vector<uint8_t>;

// Canonical serialization is little-endian throughout; these bytes feed
// consensus-visible hashes, so the encoding must be bit-exact.
class ByteWriter {
public:
    void u8(uint8_t v) { buf_.push_back(v); }

    void u16(uint16_t v) {
        for (int i = 0; i < 2; ++i) buf_.push_back(static_cast<uint8_t>(v >> (8 * i)));
    }

    void u32(uint32_t v) {
        for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<uint8_t>(v >> (8 * i)));
    }

    void u64(uint64_t v) {
        for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<uint8_t>(v >> (8 * i)));
    }

    void f32(float v) {
        uint32_t bits;
        std::memcpy(&bits, &v, 4);
        u32(bits);
    }

    void f64(double v) {
        uint64_t bits;
        std::memcpy(&bits, &v, 8);
        u64(bits);
    }

    void raw(std::span<const uint8_t> b) { buf_.insert(buf_.end(), b.begin(), b.end()); }

    void lp_bytes(std::span<const uint8_t> b) {
        u64(b.size());
        raw(b);
    }

    void lp_string(const std::string& s) {
        u64(s.size());
        buf_.insert(buf_.end(), s.begin(), s.end());
    }

    const Bytes& bytes() const { return buf_; }
    Bytes take() { return std::move(buf_); }

private:
    Bytes buf_;
};

class ByteReader {
public:
    explicit ByteReader(std::span<const uint8_t> b) : data_(b) {}

    uint8_t u8() { return take(1)[0]; }

    uint16_t u16() {
        auto b = take(2);
        return static_cast<uint16_t>(b[0] | (b[1] << 8));
    }

    uint32_t u32() {
        auto b = take(4);
        uint32_t v = 0;
        for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
        return v;
    }

    uint64_t u64() {
        auto b = take(8);
        uint64_t v = 0;
        for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
        return v;
    }

    float f32() {
        uint32_t bits = u32();
        float v;
        std::memcpy(&v, &bits, 4);
        return v;
    }

    double f64() {
        uint64_t bits = u64();
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }

    Bytes lp_bytes() {
        uint64_t n = u64();
        auto b = take(n);
        return Bytes(b.begin(), b.end());
    }

    std::string lp_string() {
        uint64_t n = u64();
        auto b = take(n);
        return std::string(b.begin(), b.end());
    }

    std::span<const uint8_t> take(size_t n) {
        if (pos_ + n > data_.size()) throw std::runtime_error("byte reader: truncated input");
        auto s = data_.subspan(pos_, n);
        pos_ += n;
        return s;
    }

    size_t remaining() const { return data_.size() - pos_; }
    bool done() const { return pos_ == data_.size(); }

private:
    std::span<const uint8_t> data_;
    size_t pos_ = 0;
};

} // namespace pogo

#endif // POGO_BYTES_HPP
