#include "vcascade/io/ppm.hpp"

#include <fstream>
#include <iterator>

#include "vcascade/error.hpp"

namespace vcascade::io {

namespace {

class HeaderReader {
public:
    explicit HeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    void skip_space_and_comments() {
        while (pos_ < bytes_.size()) {
            const char c = static_cast<char>(bytes_[pos_]);
            if (c == '#') {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
            } else if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
                ++pos_;
            } else {
                break;
            }
        }
    }

    int read_int(const char* what) {
        skip_space_and_comments();
        long long v = 0;
        std::size_t digits = 0;
        while (pos_ < bytes_.size() && bytes_[pos_] >= '0' && bytes_[pos_] <= '9') {
            v = v * 10 + (bytes_[pos_] - '0');
            if (v > 1'000'000) throw InputError(std::string("PNM ") + what + " is out of range");
            ++pos_;
            ++digits;
        }
        if (digits == 0) throw InputError(std::string("PNM header: missing ") + what);
        return static_cast<int>(v);
    }

    std::size_t pos() const { return pos_; }
    void advance(std::size_t n) { pos_ += n; }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_pnm(const Frame& frame) {
    if (frame.channels != 1 && frame.channels != 3) {
        throw InputError("PNM holds 1 or 3 channels, frame has " + std::to_string(frame.channels));
    }
    const std::string header = std::string(frame.channels == 3 ? "P6" : "P5") + "\n" + std::to_string(frame.width) +
                               " " + std::to_string(frame.height) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.insert(out.end(), frame.pixels.begin(), frame.pixels.end());
    return out;
}

Frame decode_pnm(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '6' && bytes[1] != '5')) {
        throw InputError("not a binary PNM file (expected P6 or P5)");
    }
    const int channels = bytes[1] == '6' ? 3 : 1;
    HeaderReader r(bytes);
    r.advance(2);
    const int width = r.read_int("width");
    const int height = r.read_int("height");
    const int maxval = r.read_int("maxval");
    if (width <= 0 || height <= 0) throw InputError("PNM has zero dimensions");
    if (maxval != 255) throw InputError("PNM maxval must be 255, got " + std::to_string(maxval));
    if (r.pos() >= bytes.size()) throw InputError("PNM truncated after header");
    // Exactly one whitespace byte separates the header from the raster.
    r.advance(1);

    Frame f(width, height, channels);
    if (bytes.size() - r.pos() < f.pixels.size()) {
        throw InputError("PNM raster truncated: need " + std::to_string(f.pixels.size()) + " bytes, have " +
                         std::to_string(bytes.size() - r.pos()));
    }
    std::copy(bytes.begin() + static_cast<std::ptrdiff_t>(r.pos()),
              bytes.begin() + static_cast<std::ptrdiff_t>(r.pos() + f.pixels.size()), f.pixels.begin());
    return f;
}

void write_pnm(const std::string& path, const Frame& frame) {
    const std::vector<std::uint8_t> bytes = encode_pnm(frame);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot open '" + path + "' for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw InputError("write failed for '" + path + "'");
}

Frame read_pnm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot read frame '" + path + "'");
    const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    try {
        return decode_pnm(bytes);
    } catch (const InputError& e) {
        throw InputError("'" + path + "': " + e.what());
    }
}

}  // namespace vcascade::io
