#include "mmcyto/tiff.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <map>

#include <nlohmann/json.hpp>

#include "mmcyto/error.hpp"
#include "mmcyto/io.hpp"

namespace mmcyto {

namespace {

enum Tag : std::uint16_t {
  kWidth = 256,
  kHeight = 257,
  kBits = 258,
  kCompression = 259,
  kPhotometric = 262,
  kDescription = 270,
  kStripOffsets = 273,
  kSamplesPerPixel = 277,
  kRowsPerStrip = 278,
  kStripByteCounts = 279,
  kXRes = 282,
  kYRes = 283,
  kPlanar = 284,
  kResUnit = 296,
  kSampleFormat = 339,
};

enum Type : std::uint16_t { kAscii = 2, kShort = 3, kLong = 4, kRational = 5 };

void put16(std::string& b, std::uint16_t v) {
  b.push_back(static_cast<char>(v & 0xFF));
  b.push_back(static_cast<char>(v >> 8));
}

void put32(std::string& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void set32(std::string& b, std::size_t at, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b[at + static_cast<std::size_t>(i)] = static_cast<char>((v >> (8 * i)) & 0xFF);
}

struct Entry {
  std::uint16_t tag;
  std::uint16_t type;
  std::uint32_t count;
  std::uint32_t value;  // inline value or offset
};

class Reader {
 public:
  explicit Reader(const std::string& b) : b_(b) {
    if (b.size() < 8) throw Error(ErrorCode::Parse, "tiff: file too short");
    if (b[0] == 'I' && b[1] == 'I') {
      le_ = true;
    } else if (b[0] == 'M' && b[1] == 'M') {
      le_ = false;
    } else {
      throw Error(ErrorCode::Parse, "tiff: bad byte order mark");
    }
    if (u16(2) != 42) throw Error(ErrorCode::Parse, "tiff: bad magic");
  }

  [[nodiscard]] std::uint16_t u16(std::size_t at) const {
    check(at, 2);
    const auto a = static_cast<std::uint8_t>(b_[at]), c = static_cast<std::uint8_t>(b_[at + 1]);
    return le_ ? static_cast<std::uint16_t>(a | (c << 8)) : static_cast<std::uint16_t>((a << 8) | c);
  }
  [[nodiscard]] std::uint32_t u32(std::size_t at) const {
    check(at, 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      const auto byte = static_cast<std::uint8_t>(b_[at + static_cast<std::size_t>(i)]);
      v |= le_ ? static_cast<std::uint32_t>(byte) << (8 * i) : static_cast<std::uint32_t>(byte) << (8 * (3 - i));
    }
    return v;
  }
  void check(std::size_t at, std::size_t n) const {
    if (at + n > b_.size() || at + n < at) throw Error(ErrorCode::Parse, "tiff: offset out of range");
  }
  [[nodiscard]] bool little() const noexcept { return le_; }
  [[nodiscard]] const std::string& bytes() const noexcept { return b_; }

 private:
  const std::string& b_;
  bool le_ = true;
};

std::vector<std::uint32_t> values(const Reader& r, std::size_t entry_at) {
  const auto type = r.u16(entry_at + 2);
  const auto count = r.u32(entry_at + 4);
  const std::size_t width = type == kShort ? 2 : 4;
  if (type != kShort && type != kLong) throw Error(ErrorCode::Parse, "tiff: unsupported value type");
  const std::size_t base = count * width <= 4 ? entry_at + 8 : r.u32(entry_at + 8);
  std::vector<std::uint32_t> out(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    out[i] = type == kShort ? r.u16(base + i * width) : r.u32(base + i * width);
  }
  return out;
}

}  // namespace

std::string encode_tiff(const std::vector<Plane>& pages) {
  if (pages.empty()) throw Error(ErrorCode::InvalidArgument, "encode_tiff: no pages");
  std::string b = "II";
  put16(b, 42);
  const std::size_t first_ifd_at = b.size();
  put32(b, 0);

  std::size_t link_at = first_ifd_at;
  for (const auto& p : pages) {
    if (p.empty()) throw Error(ErrorCode::InvalidArgument, "encode_tiff: empty page");
    const std::string desc = nlohmann::json{{"pixel_size_um", p.pixel_size_um()}}.dump() + '\0';
    const auto w = static_cast<std::uint32_t>(p.width()), h = static_cast<std::uint32_t>(p.height());

    // Payload: description, resolution rationals, pixels.
    const auto desc_at = static_cast<std::uint32_t>(b.size());
    b += desc;
    if (b.size() % 2 != 0) b.push_back('\0');
    const auto res_at = static_cast<std::uint32_t>(b.size());
    const double per_cm = 1e4 / p.pixel_size_um();
    const auto num = static_cast<std::uint32_t>(std::llround(std::min(per_cm * 1000.0, 4.0e9)));
    for (int k = 0; k < 2; ++k) {
      put32(b, num);
      put32(b, 1000);
    }
    const auto pix_at = static_cast<std::uint32_t>(b.size());
    const auto px = p.pixels();
    for (float f : px) put32(b, std::bit_cast<std::uint32_t>(f));

    const std::vector<Entry> entries = {
        {kWidth, kLong, 1, w},
        {kHeight, kLong, 1, h},
        {kBits, kShort, 1, 32},
        {kCompression, kShort, 1, 1},
        {kPhotometric, kShort, 1, 1},
        {kDescription, kAscii, static_cast<std::uint32_t>(desc.size()), desc_at},
        {kStripOffsets, kLong, 1, pix_at},
        {kSamplesPerPixel, kShort, 1, 1},
        {kRowsPerStrip, kLong, 1, h},
        {kStripByteCounts, kLong, 1, static_cast<std::uint32_t>(px.size() * 4)},
        {kXRes, kRational, 1, res_at},
        {kYRes, kRational, 1, res_at + 8},
        {kPlanar, kShort, 1, 1},
        {kResUnit, kShort, 1, 3},
        {kSampleFormat, kShort, 1, 3},
    };
    if (b.size() % 2 != 0) b.push_back('\0');
    const auto ifd_at = static_cast<std::uint32_t>(b.size());
    set32(b, link_at, ifd_at);
    put16(b, static_cast<std::uint16_t>(entries.size()));
    for (const auto& e : entries) {
      put16(b, e.tag);
      put16(b, e.type);
      put32(b, e.count);
      if (e.type == kShort && e.count == 1) {
        put16(b, static_cast<std::uint16_t>(e.value));
        put16(b, 0);
      } else {
        put32(b, e.value);
      }
    }
    link_at = b.size();
    put32(b, 0);
  }
  return b;
}

std::vector<Plane> decode_tiff(const std::string& bytes) {
  const Reader r(bytes);
  std::vector<Plane> pages;
  std::size_t ifd = r.u32(4);
  std::size_t guard = 0;
  while (ifd != 0) {
    if (++guard > 100000) throw Error(ErrorCode::Parse, "tiff: IFD loop");
    const auto n = r.u16(ifd);
    std::map<std::uint16_t, std::vector<std::uint32_t>> tags;
    double pixel_um = 1.0;
    for (std::uint16_t i = 0; i < n; ++i) {
      const std::size_t at = ifd + 2 + 12 * static_cast<std::size_t>(i);
      const auto tag = r.u16(at);
      const auto type = r.u16(at + 2);
      if (tag == kDescription && type == kAscii) {
        const auto count = r.u32(at + 4);
        const std::size_t off = count <= 4 ? at + 8 : r.u32(at + 8);
        r.check(off, count);
        std::string s = bytes.substr(off, count);
        while (!s.empty() && s.back() == '\0') s.pop_back();
        const auto j = nlohmann::json::parse(s, nullptr, false);
        if (j.is_object() && j.contains("pixel_size_um") && j["pixel_size_um"].is_number()) {
          pixel_um = j["pixel_size_um"].get<double>();
        }
      } else if (type == kShort || type == kLong) {
        tags[tag] = values(r, at);
      }
    }
    auto one = [&](std::uint16_t tag, std::uint32_t fallback) {
      const auto it = tags.find(tag);
      return it == tags.end() || it->second.empty() ? fallback : it->second.front();
    };
    const auto w = one(kWidth, 0), h = one(kHeight, 0);
    const auto bits = one(kBits, 1);
    const auto format = one(kSampleFormat, 1);
    if (w == 0 || h == 0) throw Error(ErrorCode::Parse, "tiff: missing dimensions");
    if (one(kCompression, 1) != 1) throw Error(ErrorCode::Parse, "tiff: compressed data not supported");
    if (one(kSamplesPerPixel, 1) != 1) throw Error(ErrorCode::Parse, "tiff: one sample per pixel required");
    const bool is_float = format == 3;
    if (is_float ? bits != 32 : (format != 1 || (bits != 8 && bits != 16 && bits != 32))) {
      throw Error(ErrorCode::Parse, "tiff: unsupported sample type");
    }
    const auto offsets = tags.count(kStripOffsets) ? tags[kStripOffsets] : std::vector<std::uint32_t>{};
    const auto counts = tags.count(kStripByteCounts) ? tags[kStripByteCounts] : std::vector<std::uint32_t>{};
    if (offsets.empty() || offsets.size() != counts.size()) throw Error(ErrorCode::Parse, "tiff: bad strips");

    std::string raw;
    for (std::size_t s = 0; s < offsets.size(); ++s) {
      r.check(offsets[s], counts[s]);
      raw.append(bytes, offsets[s], counts[s]);
    }
    const std::size_t bps = bits / 8;
    const std::size_t npx = static_cast<std::size_t>(w) * h;
    if (raw.size() < npx * bps) throw Error(ErrorCode::Parse, "tiff: strip data too short");
    std::vector<float> px(npx);
    for (std::size_t k = 0; k < npx; ++k) {
      std::uint32_t v = 0;
      for (std::size_t i = 0; i < bps; ++i) {
        const auto byte = static_cast<std::uint8_t>(raw[k * bps + i]);
        v |= r.little() ? static_cast<std::uint32_t>(byte) << (8 * i)
                        : static_cast<std::uint32_t>(byte) << (8 * (bps - 1 - i));
      }
      if (is_float) {
        px[k] = std::bit_cast<float>(v);
      } else {
        const double maxv = bits == 32 ? 4294967295.0 : static_cast<double>((1U << bits) - 1U);
        px[k] = static_cast<float>(v / maxv);
      }
      if (!std::isfinite(px[k])) throw Error(ErrorCode::Parse, "tiff: non-finite sample");
    }
    pages.emplace_back(static_cast<int>(h), static_cast<int>(w), std::move(px), pixel_um > 0 ? pixel_um : 1.0);
    ifd = r.u32(ifd + 2 + 12 * static_cast<std::size_t>(n));
  }
  if (pages.empty()) throw Error(ErrorCode::Parse, "tiff: no pages");
  return pages;
}

void write_tiff(const std::string& path, const std::vector<Plane>& pages) {
  write_file_atomic(path, encode_tiff(pages));
}

std::vector<Plane> read_tiff(const std::string& path) { return decode_tiff(read_file(path)); }

}  // namespace mmcyto
