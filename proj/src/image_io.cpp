#include "fvein/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <vector>

#include "fvein/error.hpp"

namespace fvein {

namespace {

std::uint8_t quantize(double v) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

std::vector<std::uint8_t> read_all(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::Io, "cannot open image '" + path.string() + "'");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t le32(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
std::uint16_t le16(const std::uint8_t* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

GrayImage decode_bmp(const std::vector<std::uint8_t>& buf, const std::string& name) {
    auto bad = [&](const std::string& why) { fail(ErrorKind::InvalidInput, "BMP '" + name + "': " + why); };
    if (buf.size() < 54) bad("truncated header");
    const std::uint32_t data_offset = le32(&buf[10]);
    const std::uint32_t header_size = le32(&buf[14]);
    if (header_size < 40) bad("unsupported header");
    const auto width = static_cast<std::int32_t>(le32(&buf[18]));
    const auto raw_height = static_cast<std::int32_t>(le32(&buf[22]));
    const std::uint16_t bpp = le16(&buf[28]);
    const std::uint32_t compression = le32(&buf[30]);
    std::uint32_t colors = le32(&buf[46]);
    if (bpp != 8) bad("only 8-bit images are supported, got " + std::to_string(bpp) + "-bit");
    if (compression != 0) bad("compressed BMP not supported");
    if (width <= 0 || raw_height == 0) bad("invalid dimensions");
    if (colors == 0) colors = 256;
    const bool bottom_up = raw_height > 0;
    const int height = std::abs(raw_height);

    const std::size_t palette_at = 14 + header_size;
    if (palette_at + 4ull * colors > buf.size()) bad("truncated palette");
    std::array<double, 256> lut{};
    for (std::uint32_t i = 0; i < std::min<std::uint32_t>(colors, 256); ++i) {
        const std::uint8_t b = buf[palette_at + 4 * i];
        const std::uint8_t g = buf[palette_at + 4 * i + 1];
        const std::uint8_t r = buf[palette_at + 4 * i + 2];
        if (r != g || g != b) bad("palette is not grayscale");
        lut[i] = g / 255.0;
    }

    const std::size_t stride = (static_cast<std::size_t>(width) + 3) & ~std::size_t{3};
    if (data_offset + stride * static_cast<std::size_t>(height) > buf.size()) bad("truncated pixel data");
    GrayImage img(height, width);
    for (int r = 0; r < height; ++r) {
        const int src_row = bottom_up ? height - 1 - r : r;
        const std::uint8_t* row = &buf[data_offset + stride * static_cast<std::size_t>(src_row)];
        for (int c = 0; c < width; ++c) img.pixels(r, c) = lut[row[c]];
    }
    return img;
}

struct PngReadGuard {
    png_structp png = nullptr;
    png_infop info = nullptr;
    ~PngReadGuard() { png_destroy_read_struct(&png, info ? &info : nullptr, nullptr); }
};

struct PngWriteGuard {
    png_structp png = nullptr;
    png_infop info = nullptr;
    ~PngWriteGuard() { png_destroy_write_struct(&png, info ? &info : nullptr); }
};

struct FileCloser {
    void operator()(std::FILE* f) const { std::fclose(f); }
};

// libpng reports errors by longjmp, so each setjmp frame below holds only
// trivially destructible locals.
bool png_read_header(png_structp png, png_infop info, std::FILE* fp, png_uint_32& width,
                     png_uint_32& height, int& depth, int& color) {
    if (setjmp(png_jmpbuf(png))) return false;
    png_init_io(png, fp);
    png_read_info(png, info);
    width = png_get_image_width(png, info);
    height = png_get_image_height(png, info);
    depth = png_get_bit_depth(png, info);
    color = png_get_color_type(png, info);
    return true;
}

bool png_read_pixels(png_structp png, png_bytep* rows) {
    if (setjmp(png_jmpbuf(png))) return false;
    png_read_image(png, rows);
    png_read_end(png, nullptr);
    return true;
}

bool png_write_all(png_structp png, png_infop info, std::FILE* fp, png_uint_32 width,
                   png_uint_32 height, png_bytep* rows) {
    if (setjmp(png_jmpbuf(png))) return false;
    png_init_io(png, fp);
    png_set_IHDR(png, info, width, height, 8, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    png_write_image(png, rows);
    png_write_end(png, nullptr);
    return true;
}

GrayImage decode_png(const std::filesystem::path& path) {
    std::unique_ptr<std::FILE, FileCloser> fp(std::fopen(path.c_str(), "rb"));
    if (!fp) fail(ErrorKind::Io, "cannot open image '" + path.string() + "'");
    PngReadGuard g;
    g.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    g.info = g.png ? png_create_info_struct(g.png) : nullptr;
    if (!g.png || !g.info) fail(ErrorKind::Io, "libpng initialization failed");

    png_uint_32 width = 0;
    png_uint_32 height = 0;
    int depth = 0;
    int color = 0;
    if (!png_read_header(g.png, g.info, fp.get(), width, height, depth, color))
        fail(ErrorKind::InvalidInput, "PNG '" + path.string() + "': decode error");
    if (color != PNG_COLOR_TYPE_GRAY || depth != 8)
        fail(ErrorKind::InvalidInput, "PNG '" + path.string() + "': only 8-bit grayscale is supported");

    std::vector<std::uint8_t> data(static_cast<std::size_t>(width) * height);
    std::vector<png_bytep> rows(height);
    for (png_uint_32 r = 0; r < height; ++r) rows[r] = data.data() + static_cast<std::size_t>(r) * width;
    if (!png_read_pixels(g.png, rows.data()))
        fail(ErrorKind::InvalidInput, "PNG '" + path.string() + "': decode error");

    GrayImage img(height, width);
    for (png_uint_32 r = 0; r < height; ++r)
        for (png_uint_32 c = 0; c < width; ++c) img.pixels(r, c) = data[r * width + c] / 255.0;
    return img;
}

std::string lower_extension(const std::filesystem::path& path) {
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return std::tolower(ch); });
    return ext;
}

}  // namespace

GrayImage read_image(const std::filesystem::path& path) {
    if (!std::filesystem::is_regular_file(path))
        fail(ErrorKind::Io, "image '" + path.string() + "' does not exist");
    const std::string ext = lower_extension(path);
    if (ext == ".bmp") return decode_bmp(read_all(path), path.string());
    if (ext == ".png") return decode_png(path);
    fail(ErrorKind::InvalidInput, "unsupported image format '" + ext + "' for '" + path.string() + "'");
}

void write_png(const std::filesystem::path& path, const GrayImage& image) {
    require(!image.empty(), "write_png: empty image");
    std::unique_ptr<std::FILE, FileCloser> fp(std::fopen(path.c_str(), "wb"));
    if (!fp) fail(ErrorKind::Io, "cannot write '" + path.string() + "'");
    PngWriteGuard g;
    g.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    g.info = g.png ? png_create_info_struct(g.png) : nullptr;
    if (!g.png || !g.info) fail(ErrorKind::Io, "libpng initialization failed");

    const auto h = static_cast<png_uint_32>(image.height());
    const auto w = static_cast<png_uint_32>(image.width());
    std::vector<std::uint8_t> data(static_cast<std::size_t>(w) * h);
    for (png_uint_32 r = 0; r < h; ++r)
        for (png_uint_32 c = 0; c < w; ++c) data[r * w + c] = quantize(image.pixels(r, c));
    std::vector<png_bytep> rows(h);
    for (png_uint_32 r = 0; r < h; ++r) rows[r] = data.data() + static_cast<std::size_t>(r) * w;

    if (!png_write_all(g.png, g.info, fp.get(), w, h, rows.data()))
        fail(ErrorKind::Io, "PNG encode failed for '" + path.string() + "'");
}

void write_bmp(const std::filesystem::path& path, const GrayImage& image) {
    require(!image.empty(), "write_bmp: empty image");
    const auto h = static_cast<std::uint32_t>(image.height());
    const auto w = static_cast<std::uint32_t>(image.width());
    const std::uint32_t stride = (w + 3) & ~3u;
    const std::uint32_t offset = 14 + 40 + 256 * 4;
    const std::uint32_t size = offset + stride * h;
    std::vector<std::uint8_t> buf(size, 0);
    auto put32 = [&](std::size_t at, std::uint32_t v) {
        for (int i = 0; i < 4; ++i) buf[at + i] = static_cast<std::uint8_t>(v >> (8 * i));
    };
    auto put16 = [&](std::size_t at, std::uint16_t v) {
        buf[at] = static_cast<std::uint8_t>(v);
        buf[at + 1] = static_cast<std::uint8_t>(v >> 8);
    };
    buf[0] = 'B';
    buf[1] = 'M';
    put32(2, size);
    put32(10, offset);
    put32(14, 40);
    put32(18, w);
    put32(22, h);
    put16(26, 1);
    put16(28, 8);
    put32(34, stride * h);
    put32(46, 256);
    for (std::uint32_t i = 0; i < 256; ++i) {
        const std::size_t at = 54 + 4 * i;
        buf[at] = buf[at + 1] = buf[at + 2] = static_cast<std::uint8_t>(i);
    }
    for (std::uint32_t r = 0; r < h; ++r)
        for (std::uint32_t c = 0; c < w; ++c)
            buf[offset + stride * (h - 1 - r) + c] = quantize(image.pixels(r, c));
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::Io, "cannot write '" + path.string() + "'");
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!out) fail(ErrorKind::Io, "write failed for '" + path.string() + "'");
}

}  // namespace fvein
