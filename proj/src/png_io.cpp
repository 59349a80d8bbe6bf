#include "printseg/png_io.hpp"

#include <png.h>

#include <cstring>

#include "printseg/util.hpp"

namespace printseg {

namespace {

std::string encode_png(int width, int height, int format,
                       const std::vector<std::uint8_t>& pixels, std::size_t channels) {
    if (width <= 0 || height <= 0) {
        throw Error(ErrorCategory::Validation, "png dimensions must be positive");
    }
    if (pixels.size() != static_cast<std::size_t>(width) * height * channels) {
        throw Error(ErrorCategory::Validation, "pixel buffer size does not match dimensions");
    }
    png_image image;
    std::memset(&image, 0, sizeof(image));
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(width);
    image.height = static_cast<png_uint_32>(height);
    image.format = static_cast<png_uint_32>(format);

    png_alloc_size_t size = 0;
    if (!png_image_write_to_memory(&image, nullptr, &size, 0, pixels.data(), 0, nullptr)) {
        throw Error(ErrorCategory::Io, std::string("png encode failed: ") + image.message);
    }
    std::string buffer(size, '\0');
    if (!png_image_write_to_memory(&image, buffer.data(), &size, 0, pixels.data(), 0, nullptr)) {
        throw Error(ErrorCategory::Io, std::string("png encode failed: ") + image.message);
    }
    buffer.resize(size);
    return buffer;
}

std::vector<std::uint8_t> decode_png_rgb(const std::filesystem::path& path, int& width,
                                         int& height) {
    const std::string bytes = read_binary_file(path);
    png_image image;
    std::memset(&image, 0, sizeof(image));
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
        throw Error(ErrorCategory::Parse,
                    path.string() + ": not a readable png (" + image.message + ")");
    }
    image.format = PNG_FORMAT_RGB;
    std::vector<std::uint8_t> pixels(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, pixels.data(), 0, nullptr)) {
        throw Error(ErrorCategory::Parse,
                    path.string() + ": png decode failed (" + image.message + ")");
    }
    width = static_cast<int>(image.width);
    height = static_cast<int>(image.height);
    return pixels;
}

}  // namespace

std::string encode_png_rgb8(int width, int height, const std::vector<std::uint8_t>& pixels) {
    return encode_png(width, height, PNG_FORMAT_RGB, pixels, 3);
}

std::string encode_png_gray8(int width, int height, const std::vector<std::uint8_t>& pixels) {
    return encode_png(width, height, PNG_FORMAT_GRAY, pixels, 1);
}

void write_png_rgb8(const std::filesystem::path& path, int width, int height,
                    const std::vector<std::uint8_t>& pixels) {
    atomic_write_file(path, encode_png_rgb8(width, height, pixels));
}

void write_png_gray8(const std::filesystem::path& path, int width, int height,
                     const std::vector<std::uint8_t>& pixels) {
    atomic_write_file(path, encode_png_gray8(width, height, pixels));
}

ImageRgb read_png_rgb8(const std::filesystem::path& path) {
    ImageRgb image;
    image.pixels = decode_png_rgb(path, image.width, image.height);
    return image;
}

ImageGray read_png_gray8(const std::filesystem::path& path) {
    int width = 0;
    int height = 0;
    const std::vector<std::uint8_t> rgb = decode_png_rgb(path, width, height);
    ImageGray gray;
    gray.width = width;
    gray.height = height;
    gray.pixels.resize(static_cast<std::size_t>(width) * height);
    for (std::size_t i = 0; i < gray.pixels.size(); ++i) {
        const std::uint8_t r = rgb[i * 3];
        if (rgb[i * 3 + 1] != r || rgb[i * 3 + 2] != r) {
            throw Error(ErrorCategory::Validation,
                        path.string() + ": mask is not grayscale at pixel " + std::to_string(i));
        }
        gray.pixels[i] = r;
    }
    return gray;
}

}  // namespace printseg
