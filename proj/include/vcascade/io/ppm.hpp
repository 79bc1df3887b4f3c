#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vcascade/preprocess.hpp"

namespace vcascade::io {

// Binary PNM: P6 for 3-channel frames, P5 for 1-channel, maxval 255.
// Header comments are accepted on read, never written.
std::vector<std::uint8_t> encode_pnm(const Frame& frame);
Frame decode_pnm(std::span<const std::uint8_t> bytes);  // throws InputError

void write_pnm(const std::string& path, const Frame& frame);
Frame read_pnm(const std::string& path);

}  // namespace vcascade::io
