#include "tgs/image.hpp"

#include <zlib.h>

#include <algorithm>
#include <cstring>
#include <fstream>

#include "tgs/parallel.hpp"

namespace tgs {

Image error_map(const Image& rendered, const Image& observed) {
  if (!rendered.same_shape(observed))
    throw invalid_input("error_map: resolution mismatch");
  Image err(rendered.width, rendered.height, 1);
  parallel_for(rendered.pixel_count(), [&](std::size_t p) {
    double s = 0;
    for (int c = 0; c < rendered.channels; ++c)
      s += std::abs(rendered.data[p * rendered.channels + c] -
                    observed.data[p * observed.channels + c]);
    err.data[p] = s / rendered.channels;
  });
  return err;
}

// ------------------------------------------------------------ raw dump ----

namespace {

void put_u32(std::ostream& os, uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16),
                        static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<char*>(b), 4);
}

uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

}  // namespace

void write_raw(const std::string& path, const Image& img) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw format_error("write_raw: cannot open " + path);
  os.write("TGF1", 4);
  put_u32(os, static_cast<uint32_t>(img.width));
  put_u32(os, static_cast<uint32_t>(img.height));
  put_u32(os, static_cast<uint32_t>(img.channels));
  std::vector<float> f(img.data.begin(), img.data.end());
  os.write(reinterpret_cast<const char*>(f.data()),
           static_cast<std::streamsize>(f.size() * sizeof(float)));
  if (!os) throw format_error("write_raw: write failed for " + path);
}

Image read_raw(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw format_error("read_raw: cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "TGF1", 4) != 0)
    throw format_error("read_raw: bad magic in " + path);
  Image img;
  img.width = static_cast<int>(get_u32(is));
  img.height = static_cast<int>(get_u32(is));
  img.channels = static_cast<int>(get_u32(is));
  std::size_t n = static_cast<std::size_t>(img.width) * img.height * img.channels;
  std::vector<float> f(n);
  is.read(reinterpret_cast<char*>(f.data()), static_cast<std::streamsize>(n * sizeof(float)));
  if (!is) throw format_error("read_raw: truncated file " + path);
  img.data.assign(f.begin(), f.end());
  return img;
}

// ----------------------------------------------------------------- png ----

namespace {

// Minimal PNG container: IHDR + one zlib IDAT (filter 0 rows) + IEND.
// The reader handles the general non-interlaced 8/16-bit gray/RGB case with
// all five scanline filters, which covers everything we write and the usual
// external tooling output.

uint32_t crc32_of(const unsigned char* data, std::size_t n, uint32_t seed = 0) {
  return static_cast<uint32_t>(
      ::crc32(seed, reinterpret_cast<const Bytef*>(data), static_cast<uInt>(n)));
}

void put_be32(std::vector<unsigned char>& out, uint32_t v) {
  out.push_back(static_cast<unsigned char>(v >> 24));
  out.push_back(static_cast<unsigned char>(v >> 16));
  out.push_back(static_cast<unsigned char>(v >> 8));
  out.push_back(static_cast<unsigned char>(v));
}

void write_chunk(std::ofstream& os, const char* type,
                 const std::vector<unsigned char>& payload) {
  std::vector<unsigned char> head;
  put_be32(head, static_cast<uint32_t>(payload.size()));
  os.write(reinterpret_cast<char*>(head.data()), 4);
  os.write(type, 4);
  if (!payload.empty())
    os.write(reinterpret_cast<const char*>(payload.data()),
             static_cast<std::streamsize>(payload.size()));
  uint32_t crc = crc32_of(reinterpret_cast<const unsigned char*>(type), 4);
  crc = crc32_of(payload.data(), payload.size(), crc);
  std::vector<unsigned char> tail;
  put_be32(tail, crc);
  os.write(reinterpret_cast<char*>(tail.data()), 4);
}

void write_png(const std::string& path, int width, int height, int channels,
               int bit_depth, const std::vector<unsigned char>& pixels) {
  // pixels: rows of raw samples, big-endian for 16-bit, no filter bytes
  std::size_t stride = static_cast<std::size_t>(width) * channels * (bit_depth / 8);
  std::vector<unsigned char> raw;
  raw.reserve((stride + 1) * height);
  for (int y = 0; y < height; ++y) {
    raw.push_back(0);  // filter type 0 (none)
    raw.insert(raw.end(), pixels.begin() + static_cast<std::ptrdiff_t>(y * stride),
               pixels.begin() + static_cast<std::ptrdiff_t>((y + 1) * stride));
  }
  uLongf comp_size = compressBound(static_cast<uLong>(raw.size()));
  std::vector<unsigned char> comp(comp_size);
  if (compress2(comp.data(), &comp_size, raw.data(), static_cast<uLong>(raw.size()), 6) != Z_OK)
    throw format_error("write_png: deflate failed for " + path);
  comp.resize(comp_size);

  std::ofstream os(path, std::ios::binary);
  if (!os) throw format_error("write_png: cannot open " + path);
  static const unsigned char sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  os.write(reinterpret_cast<const char*>(sig), 8);

  std::vector<unsigned char> ihdr;
  put_be32(ihdr, static_cast<uint32_t>(width));
  put_be32(ihdr, static_cast<uint32_t>(height));
  ihdr.push_back(static_cast<unsigned char>(bit_depth));
  ihdr.push_back(channels == 1 ? 0 : 2);  // grayscale or truecolor
  ihdr.push_back(0);                      // deflate
  ihdr.push_back(0);                      // default filtering
  ihdr.push_back(0);                      // no interlace
  write_chunk(os, "IHDR", ihdr);
  write_chunk(os, "IDAT", comp);
  write_chunk(os, "IEND", {});
  if (!os) throw format_error("write_png: write failed for " + path);
}

struct PngData {
  int width = 0, height = 0, channels = 0, bit_depth = 0;
  std::vector<unsigned char> samples;  // unfiltered rows, big-endian 16-bit
};

int paeth(int a, int b, int c) {
  int p = a + b - c;
  int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
  if (pa <= pb && pa <= pc) return a;
  if (pb <= pc) return b;
  return c;
}

PngData read_png_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw format_error("read_png: cannot open " + path);
  unsigned char sig[8];
  is.read(reinterpret_cast<char*>(sig), 8);
  static const unsigned char want[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  if (!is || std::memcmp(sig, want, 8) != 0)
    throw format_error("read_png: not a PNG: " + path);

  PngData png;
  std::vector<unsigned char> idat;
  for (;;) {
    unsigned char head[8];
    is.read(reinterpret_cast<char*>(head), 8);
    if (!is) throw format_error("read_png: truncated " + path);
    uint32_t len = (static_cast<uint32_t>(head[0]) << 24) | (head[1] << 16) |
                   (head[2] << 8) | head[3];
    std::string type(reinterpret_cast<char*>(head + 4), 4);
    std::vector<unsigned char> payload(len);
    if (len) is.read(reinterpret_cast<char*>(payload.data()), len);
    is.ignore(4);  // crc
    if (!is) throw format_error("read_png: truncated chunk in " + path);
    if (type == "IHDR") {
      png.width = (payload[0] << 24) | (payload[1] << 16) | (payload[2] << 8) | payload[3];
      png.height = (payload[4] << 24) | (payload[5] << 16) | (payload[6] << 8) | payload[7];
      png.bit_depth = payload[8];
      int color_type = payload[9];
      if (payload[12] != 0) throw format_error("read_png: interlaced PNG unsupported");
      if (color_type == 0) png.channels = 1;
      else if (color_type == 2) png.channels = 3;
      else throw format_error("read_png: unsupported color type " + std::to_string(color_type));
      if (png.bit_depth != 8 && png.bit_depth != 16)
        throw format_error("read_png: unsupported bit depth");
    } else if (type == "IDAT") {
      idat.insert(idat.end(), payload.begin(), payload.end());
    } else if (type == "IEND") {
      break;
    }
  }

  std::size_t stride =
      static_cast<std::size_t>(png.width) * png.channels * (png.bit_depth / 8);
  std::size_t raw_size = (stride + 1) * png.height;
  std::vector<unsigned char> raw(raw_size);
  uLongf out_size = static_cast<uLongf>(raw_size);
  if (uncompress(raw.data(), &out_size, idat.data(), static_cast<uLong>(idat.size())) != Z_OK ||
      out_size != raw_size)
    throw format_error("read_png: inflate failed for " + path);

  int bpp = png.channels * (png.bit_depth / 8);
  png.samples.resize(stride * png.height);
  for (int y = 0; y < png.height; ++y) {
    const unsigned char* src = raw.data() + static_cast<std::size_t>(y) * (stride + 1);
    unsigned char filter = src[0];
    ++src;
    unsigned char* dst = png.samples.data() + static_cast<std::size_t>(y) * stride;
    const unsigned char* prev =
        y > 0 ? png.samples.data() + static_cast<std::size_t>(y - 1) * stride : nullptr;
    for (std::size_t i = 0; i < stride; ++i) {
      int a = i >= static_cast<std::size_t>(bpp) ? dst[i - bpp] : 0;
      int b = prev ? prev[i] : 0;
      int c = (prev && i >= static_cast<std::size_t>(bpp)) ? prev[i - bpp] : 0;
      int x = src[i];
      switch (filter) {
        case 0: dst[i] = static_cast<unsigned char>(x); break;
        case 1: dst[i] = static_cast<unsigned char>((x + a) & 0xff); break;
        case 2: dst[i] = static_cast<unsigned char>((x + b) & 0xff); break;
        case 3: dst[i] = static_cast<unsigned char>((x + (a + b) / 2) & 0xff); break;
        case 4: dst[i] = static_cast<unsigned char>((x + paeth(a, b, c)) & 0xff); break;
        default: throw format_error("read_png: bad filter byte in " + path);
      }
    }
  }
  return png;
}

}  // namespace

void write_png8(const std::string& path, const Image& img) {
  std::vector<unsigned char> px(img.data.size());
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    double v = std::clamp(img.data[i], 0.0, 1.0);
    px[i] = static_cast<unsigned char>(std::lround(v * 255.0));
  }
  write_png(path, img.width, img.height, img.channels, 8, px);
}

void write_png16_gray(const std::string& path, const std::vector<uint16_t>& samples,
                      int width, int height) {
  std::vector<unsigned char> px(samples.size() * 2);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    px[2 * i] = static_cast<unsigned char>(samples[i] >> 8);  // big-endian per PNG
    px[2 * i + 1] = static_cast<unsigned char>(samples[i] & 0xff);
  }
  write_png(path, width, height, 1, 16, px);
}

Image read_png(const std::string& path) {
  PngData png = read_png_file(path);
  Image img(png.width, png.height, png.channels);
  std::size_t n = img.data.size();
  if (png.bit_depth == 8) {
    for (std::size_t i = 0; i < n; ++i) img.data[i] = png.samples[i] / 255.0;
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      uint16_t v = static_cast<uint16_t>((png.samples[2 * i] << 8) | png.samples[2 * i + 1]);
      img.data[i] = v / 65535.0;
    }
  }
  return img;
}

std::vector<uint16_t> read_png16_gray(const std::string& path, int& width, int& height) {
  PngData png = read_png_file(path);
  if (png.channels != 1 || png.bit_depth != 16)
    throw format_error("read_png16_gray: " + path + " is not 16-bit grayscale");
  width = png.width;
  height = png.height;
  std::vector<uint16_t> out(static_cast<std::size_t>(width) * height);
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = static_cast<uint16_t>((png.samples[2 * i] << 8) | png.samples[2 * i + 1]);
  return out;
}

}  // namespace tgs
