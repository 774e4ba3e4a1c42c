// Copyright (c) 2026, the depthdecode authors
// SPDX-License-Identifier: Apache-2.0

#include "depthdecode/io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "depthdecode/rng.hpp"

namespace depthdecode::io {

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw std::runtime_error(path + ": " + what);
}

void put_u32(std::ostream& os, uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

uint32_t get_u32(std::istream& is, const std::string& path) {
    unsigned char b[4];
    if (!is.read(reinterpret_cast<char*>(b), 4)) fail(path, "truncated file");
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
           (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

void put_floats(std::ostream& os, const float* v, size_t n) {
    static_assert(sizeof(float) == 4);
    // assumes a little-endian host, which the build targets
    os.write(reinterpret_cast<const char*>(v), static_cast<std::streamsize>(n * 4));
}

void get_floats(std::istream& is, float* v, size_t n, const std::string& path) {
    if (!is.read(reinterpret_cast<char*>(v), static_cast<std::streamsize>(n * 4)))
        fail(path, "truncated file");
}

void check_magic(std::istream& is, const char* magic, const std::string& path) {
    char buf[4];
    if (!is.read(buf, 4)) fail(path, "truncated file");
    if (std::memcmp(buf, magic, 4) != 0)
        fail(path, std::string("bad magic, expected ") + magic);
}

std::ofstream open_out(const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) fail(path, "cannot open for writing");
    return os;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) fail(path, "cannot open");
    return is;
}

}  // namespace

void write_ddr(const std::string& path, const Tensor& chw) {
    if (chw.ndim() != 3) fail(path, "raster tensor must be [C,H,W], got " + chw.shape_str());
    auto os = open_out(path);
    os.write("DDR1", 4);
    put_u32(os, static_cast<uint32_t>(chw.dim(0)));
    put_u32(os, static_cast<uint32_t>(chw.dim(1)));
    put_u32(os, static_cast<uint32_t>(chw.dim(2)));
    put_floats(os, chw.data(), static_cast<size_t>(chw.numel()));
    if (!os) fail(path, "write failed");
}

Tensor read_ddr(const std::string& path) {
    auto is = open_in(path);
    check_magic(is, "DDR1", path);
    const int C = static_cast<int>(get_u32(is, path));
    const int H = static_cast<int>(get_u32(is, path));
    const int W = static_cast<int>(get_u32(is, path));
    if (C <= 0 || H <= 0 || W <= 0 || static_cast<int64_t>(C) * H * W > (1ll << 31))
        fail(path, "implausible raster dimensions");
    Tensor t({C, H, W});
    get_floats(is, t.data(), static_cast<size_t>(t.numel()), path);
    return t;
}

void write_ddf(const std::string& path, const std::vector<float>& v) {
    auto os = open_out(path);
    os.write("DDF1", 4);
    put_u32(os, static_cast<uint32_t>(v.size()));
    put_floats(os, v.data(), v.size());
    if (!os) fail(path, "write failed");
}

std::vector<float> read_ddf(const std::string& path) {
    auto is = open_in(path);
    check_magic(is, "DDF1", path);
    const uint32_t V = get_u32(is, path);
    if (V > (1u << 28)) fail(path, "implausible voxel count");
    std::vector<float> v(V);
    get_floats(is, v.data(), v.size(), path);
    return v;
}

void write_voxel_table(const std::string& path, const std::vector<VoxelInfo>& rows) {
    std::ofstream os(path);
    if (!os) fail(path, "cannot open for writing");
    os << "voxel_id,region\n";
    for (const auto& r : rows) os << r.voxel_id << ',' << r.region << '\n';
    if (!os) fail(path, "write failed");
}

std::vector<VoxelInfo> read_voxel_table(const std::string& path) {
    std::ifstream is(path);
    if (!is) fail(path, "cannot open");
    std::string line;
    if (!std::getline(is, line)) fail(path, "empty voxel table");
    // tolerate trailing \r from files written on other systems
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "voxel_id,region") fail(path, "expected header 'voxel_id,region'");
    std::vector<VoxelInfo> rows;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) fail(path, "malformed row: " + line);
        rows.push_back({line.substr(0, comma), line.substr(comma + 1)});
    }
    return rows;
}

void write_png_rgb(const std::string& path, const Tensor& rgb) {
    if (rgb.ndim() != 3 || rgb.dim(0) != 3)
        fail(path, "expected [3,H,W] raster, got " + rgb.shape_str());
    const int H = rgb.dim(1), W = rgb.dim(2);
    std::vector<unsigned char> row(static_cast<size_t>(W) * 3);

    FILE* fp = std::fopen(path.c_str(), "wb");
    if (!fp) fail(path, "cannot open for writing");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info || setjmp(png_jmpbuf(png))) {
        if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
        std::fclose(fp);
        fail(path, "libpng write error");
    }
    png_init_io(png, fp);
    png_set_IHDR(png, info, static_cast<png_uint_32>(W), static_cast<png_uint_32>(H), 8,
                 PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x)
            for (int c = 0; c < 3; ++c) {
                const float v = std::clamp(rgb.at(c, y, x), 0.0f, 1.0f);
                row[static_cast<size_t>(x) * 3 + static_cast<size_t>(c)] =
                    static_cast<unsigned char>(std::lround(v * 255.0f));
            }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
}

Tensor read_png_rgb(const std::string& path) {
    FILE* fp = std::fopen(path.c_str(), "rb");
    if (!fp) fail(path, "cannot open");
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info || setjmp(png_jmpbuf(png))) {
        if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
        std::fclose(fp);
        fail(path, "libpng read error");
    }
    png_init_io(png, fp);
    png_read_info(png, info);
    // normalize any input PNG to 8-bit RGB
    png_set_expand(png);
    png_set_strip_16(png);
    png_set_strip_alpha(png);
    png_set_gray_to_rgb(png);
    png_read_update_info(png, info);
    const int W = static_cast<int>(png_get_image_width(png, info));
    const int H = static_cast<int>(png_get_image_height(png, info));
    if (png_get_rowbytes(png, info) != static_cast<size_t>(W) * 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        std::fclose(fp);
        fail(path, "unsupported PNG layout");
    }
    std::vector<unsigned char> row(static_cast<size_t>(W) * 3);
    Tensor t({3, H, W});
    for (int y = 0; y < H; ++y) {
        png_read_row(png, row.data(), nullptr);
        for (int x = 0; x < W; ++x)
            for (int c = 0; c < 3; ++c)
                t.at(c, y, x) =
                    static_cast<float>(row[static_cast<size_t>(x) * 3 + static_cast<size_t>(c)]) / 255.0f;
    }
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    return t;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    {
        auto os = open_out(path);
        os.write("DDW1", 4);
        put_u32(os, static_cast<uint32_t>(ckpt.tensors.size()));
        for (const auto& [name, t] : ckpt.tensors) {
            put_u32(os, static_cast<uint32_t>(name.size()));
            os.write(name.data(), static_cast<std::streamsize>(name.size()));
            put_u32(os, static_cast<uint32_t>(t.ndim()));
            for (int d = 0; d < t.ndim(); ++d) put_u32(os, static_cast<uint32_t>(t.dim(d)));
            put_floats(os, t.data(), static_cast<size_t>(t.numel()));
        }
        if (!os) fail(path, "write failed");
    }
    std::ofstream ms(path + ".manifest");
    if (!ms) fail(path + ".manifest", "cannot open for writing");
    for (const auto& [key, value] : ckpt.meta) ms << key << " = " << value << '\n';
    if (!ms) fail(path + ".manifest", "write failed");
}

Checkpoint load_checkpoint(const std::string& path) {
    Checkpoint ckpt;
    auto is = open_in(path);
    check_magic(is, "DDW1", path);
    const uint32_t count = get_u32(is, path);
    for (uint32_t i = 0; i < count; ++i) {
        const uint32_t name_len = get_u32(is, path);
        if (name_len > 4096) fail(path, "implausible tensor name length");
        std::string name(name_len, '\0');
        if (!is.read(name.data(), name_len)) fail(path, "truncated file");
        const uint32_t ndim = get_u32(is, path);
        if (ndim == 0 || ndim > 8) fail(path, "implausible tensor rank");
        std::vector<int> shape(ndim);
        for (auto& d : shape) d = static_cast<int>(get_u32(is, path));
        Tensor t(shape);
        get_floats(is, t.data(), static_cast<size_t>(t.numel()), path);
        ckpt.tensors.emplace(std::move(name), std::move(t));
    }

    std::ifstream ms(path + ".manifest");
    if (ms) {
        std::string line;
        while (std::getline(ms, line)) {
            if (line.empty() || line[0] == '#') continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos) continue;
            auto trim = [](std::string s) {
                const auto b = s.find_first_not_of(" \t");
                const auto e = s.find_last_not_of(" \t\r");
                return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
            };
            ckpt.meta[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
        }
    }
    return ckpt;
}

bool file_exists(const std::string& path) {
    std::error_code ec;
    return std::filesystem::exists(path, ec);
}

std::string file_checksum(const std::string& path) {
    auto is = open_in(path);
    uint64_t h = 1469598103934665603ull;
    char buf[1 << 16];
    while (is.read(buf, sizeof(buf)) || is.gcount() > 0) {
        h = fnv1a(buf, static_cast<size_t>(is.gcount()), h);
        if (is.eof()) break;
    }
    std::ostringstream os;
    os << std::hex << h;
    return os.str();
}

}  // namespace depthdecode::io
