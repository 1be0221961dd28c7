#include "mmcut/raster_io.hpp"

#include <png.h>

#include <cctype>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "mmcut/errors.hpp"

namespace mmcut {
namespace {

struct FileCloser {
    FILE* fp = nullptr;
    ~FileCloser() {
        if (fp) fclose(fp);
    }
};

bool has_suffix(const std::string& s, const std::string& suffix) {
    if (s.size() < suffix.size()) return false;
    return std::equal(suffix.rbegin(), suffix.rend(), s.rbegin(),
                      [](char a, char b) { return std::tolower((unsigned char)b) == a; });
}

Grid<uint8_t> load_png_gray(const std::string& path, FILE* fp) {
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError("load: libpng init failed for " + path);
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw IoError("load: libpng init failed for " + path);
    }
    std::vector<png_bytep> rows;
    Grid<uint8_t> out;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("load: corrupt PNG " + path);
    }
    png_init_io(png, fp);
    png_read_info(png, info);

    const png_byte color_type = png_get_color_type(png, info);
    const png_byte bit_depth = png_get_bit_depth(png, info);
    if (color_type != PNG_COLOR_TYPE_GRAY || bit_depth > 8) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw UnsupportedFormat("load: " + path + " is not an 8-bit grayscale PNG");
    }
    if (bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    png_read_update_info(png, info);

    const int w = (int)png_get_image_width(png, info);
    const int h = (int)png_get_image_height(png, info);
    out = Grid<uint8_t>(w, h);
    rows.resize(h);
    for (int y = 0; y < h; ++y) rows[y] = &out.data()[(size_t)y * w];
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return out;
}

Grid<uint8_t> load_pgm(const std::string& path, std::ifstream& in) {
    auto next_token = [&in, &path]() {
        std::string tok;
        int c;
        while ((c = in.get()) != EOF) {
            if (c == '#') {
                while ((c = in.get()) != EOF && c != '\n') {
                }
            } else if (!std::isspace(c)) {
                tok.push_back((char)c);
                while ((c = in.get()) != EOF && !std::isspace(c)) tok.push_back((char)c);
                return tok;
            }
        }
        throw UnsupportedFormat("load: truncated PGM header in " + path);
    };
    const std::string magic = next_token();
    if (magic != "P5") throw UnsupportedFormat("load: " + path + " is not a binary PGM");
    const int w = std::stoi(next_token());
    const int h = std::stoi(next_token());
    const int maxval = std::stoi(next_token());
    if (w <= 0 || h <= 0) throw UnsupportedFormat("load: bad PGM dimensions in " + path);
    if (maxval != 255) throw UnsupportedFormat("load: " + path + " is not 8-bit (maxval 255)");
    Grid<uint8_t> out(w, h);
    in.read(reinterpret_cast<char*>(out.data().data()), (std::streamsize)out.size());
    if (in.gcount() != (std::streamsize)out.size())
        throw IoError("load: truncated PGM pixel data in " + path);
    return out;
}

// Dispatch on content: PNG signature or PGM magic.
Grid<uint8_t> load_gray8(const std::string& path) {
    std::ifstream probe(path, std::ios::binary);
    if (!probe) throw IoError("load: cannot open " + path);
    unsigned char sig[8] = {0};
    probe.read(reinterpret_cast<char*>(sig), 8);
    const std::streamsize got = probe.gcount();
    if (got >= 8 && png_sig_cmp(sig, 0, 8) == 0) {
        probe.close();
        FileCloser fc{fopen(path.c_str(), "rb")};
        if (!fc.fp) throw IoError("load: cannot open " + path);
        return load_png_gray(path, fc.fp);
    }
    if (got >= 2 && sig[0] == 'P' && sig[1] == '5') {
        probe.clear();
        probe.seekg(0);
        return load_pgm(path, probe);
    }
    throw UnsupportedFormat("load: " + path + " is neither PNG nor binary PGM");
}

void save_png_gray(const Grid<uint8_t>& img, const std::string& path) {
    FileCloser fc{fopen(path.c_str(), "wb")};
    if (!fc.fp) throw IoError("save: cannot open " + path + " for writing");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError("save: libpng init failed for " + path);
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw IoError("save: libpng init failed for " + path);
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("save: PNG write failed for " + path);
    }
    png_init_io(png, fc.fp);
    png_set_IHDR(png, info, img.width(), img.height(), 8, PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < img.height(); ++y)
        png_write_row(png, const_cast<png_bytep>(&img.data()[(size_t)y * img.width()]));
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

void save_pgm(const Grid<uint8_t>& img, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("save: cannot open " + path + " for writing");
    out << "P5\n" << img.width() << " " << img.height() << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.data().data()), (std::streamsize)img.size());
    if (!out) throw IoError("save: write failed for " + path);
}

void save_gray8(const Grid<uint8_t>& img, const std::string& path) {
    if (has_suffix(path, ".png"))
        save_png_gray(img, path);
    else if (has_suffix(path, ".pgm"))
        save_pgm(img, path);
    else
        throw UnsupportedFormat("save: " + path + " must end in .png or .pgm");
}

}  // namespace

GrayImage load_image(const std::string& path) {
    Grid<uint8_t> raw = load_gray8(path);
    GrayImage img(raw.width(), raw.height());
    for (size_t i = 0; i < raw.size(); ++i) img[i] = raw[i] / 255.0;
    return img;
}

BinaryMask load_mask(const std::string& path) {
    Grid<uint8_t> raw = load_gray8(path);
    BinaryMask mask(raw.width(), raw.height());
    for (size_t i = 0; i < raw.size(); ++i) mask[i] = raw[i] >= 128 ? 1 : 0;
    return mask;
}

void save_image(const GrayImage& image, const std::string& path) {
    Grid<uint8_t> raw(image.width(), image.height());
    for (size_t i = 0; i < image.size(); ++i) {
        double v = image[i];
        v = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
        raw[i] = (uint8_t)(v * 255.0 + 0.5);
    }
    save_gray8(raw, path);
}

void save_mask(const BinaryMask& mask, const std::string& path) {
    Grid<uint8_t> raw(mask.width(), mask.height());
    for (size_t i = 0; i < mask.size(); ++i) raw[i] = mask[i] ? 255 : 0;
    save_gray8(raw, path);
}

void save_rgb(const Grid<uint8_t>& r, const Grid<uint8_t>& g, const Grid<uint8_t>& b,
              const std::string& path) {
    FileCloser fc{fopen(path.c_str(), "wb")};
    if (!fc.fp) throw IoError("save: cannot open " + path + " for writing");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError("save: libpng init failed for " + path);
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw IoError("save: libpng init failed for " + path);
    }
    std::vector<uint8_t> row((size_t)r.width() * 3);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("save: PNG write failed for " + path);
    }
    png_init_io(png, fc.fp);
    png_set_IHDR(png, info, r.width(), r.height(), 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < r.height(); ++y) {
        for (int x = 0; x < r.width(); ++x) {
            row[(size_t)x * 3 + 0] = r.at(x, y);
            row[(size_t)x * 3 + 1] = g.at(x, y);
            row[(size_t)x * 3 + 2] = b.at(x, y);
        }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

}  // namespace mmcut
