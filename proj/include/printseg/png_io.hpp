#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "printseg/scene.hpp"

namespace printseg {

struct ImageGray {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;
};

// In-memory encodes so callers can digest the exact bytes before writing.
std::string encode_png_rgb8(int width, int height, const std::vector<std::uint8_t>& pixels);
std::string encode_png_gray8(int width, int height, const std::vector<std::uint8_t>& pixels);

void write_png_rgb8(const std::filesystem::path& path, int width, int height,
                    const std::vector<std::uint8_t>& pixels);
void write_png_gray8(const std::filesystem::path& path, int width, int height,
                     const std::vector<std::uint8_t>& pixels);

ImageRgb read_png_rgb8(const std::filesystem::path& path);

// Masks must be genuinely grayscale; RGB files are accepted only when every
// pixel has R == G == B, so no channel mixing can silently alter labels.
ImageGray read_png_gray8(const std::filesystem::path& path);

}  // namespace printseg
