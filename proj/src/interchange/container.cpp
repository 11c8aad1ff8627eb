// SPDX-FileCopyrightText: Copyright (c) 2026 The cose-eval Authors.
// SPDX-License-Identifier: Apache-2.0

#include "cose/interchange/container.hpp"

#include <bit>
#include <fstream>
#include <iterator>
#include <limits>
#include <unordered_set>

#include "cose/error.hpp"

namespace cose::interchange {
namespace {

bool valid_utf8(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    std::size_t extra;
    std::uint32_t cp;
    if (c < 0x80) {
      ++i;
      continue;
    } else if ((c & 0xE0) == 0xC0) {
      extra = 1;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      extra = 2;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      extra = 3;
      cp = c & 0x07;
    } else {
      return false;
    }
    if (i + extra >= s.size()) return false;
    for (std::size_t k = 1; k <= extra; ++k) {
      const auto cc = static_cast<unsigned char>(s[i + k]);
      if ((cc & 0xC0) != 0x80) return false;
      cp = (cp << 6) | (cc & 0x3F);
    }
    if ((extra == 1 && cp < 0x80) || (extra == 2 && cp < 0x800) || (extra == 3 && cp < 0x10000) ||
        cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
      return false;
    }
    i += extra + 1;
  }
  return true;
}

bool checked_numel(const std::vector<std::uint64_t>& dims, std::uint64_t* out) {
  std::uint64_t n = 1;
  for (std::uint64_t d : dims) {
    if (d != 0 && n > std::numeric_limits<std::uint64_t>::max() / d) return false;
    n *= d;
  }
  *out = n;
  return true;
}

class Writer {
 public:
  void u8(std::uint8_t v) { bytes_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void raw(std::string_view s) { bytes_.insert(bytes_.end(), s.begin(), s.end()); }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  std::vector<std::uint8_t> take() { return std::move(bytes_); }
  void reserve(std::size_t n) { bytes_.reserve(n); }

 private:
  std::vector<std::uint8_t> bytes_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::size_t remaining() const { return bytes_.size() - pos_; }

  bool u8(std::uint8_t* v) {
    if (remaining() < 1) return false;
    *v = bytes_[pos_++];
    return true;
  }
  bool u32(std::uint32_t* v) {
    if (remaining() < 4) return false;
    std::uint32_t r = 0;
    for (int i = 0; i < 4; ++i) r |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    *v = r;
    return true;
  }
  bool u64(std::uint64_t* v) {
    if (remaining() < 8) return false;
    std::uint64_t r = 0;
    for (int i = 0; i < 8; ++i) r |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 8;
    *v = r;
    return true;
  }
  bool str(std::size_t n, std::string* s) {
    if (remaining() < n) return false;
    s->assign(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return true;
  }
  bool floats(std::size_t n, std::vector<float>* out) {
    if (remaining() / 4 < n) return false;
    out->resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::uint32_t r = 0;
      u32(&r);
      (*out)[i] = std::bit_cast<float>(r);
    }
    return true;
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

// Bounded nesting keeps the recursive JSON parser off deep hostile inputs.
bool nesting_within(std::string_view s, int limit) {
  int depth = 0;
  bool in_string = false, escaped = false;
  for (char ch : s) {
    if (in_string) {
      if (escaped) escaped = false;
      else if (ch == '\\') escaped = true;
      else if (ch == '"') in_string = false;
      continue;
    }
    if (ch == '"') in_string = true;
    else if (ch == '[' || ch == '{') {
      if (++depth > limit) return false;
    } else if (ch == ']' || ch == '}') {
      --depth;
    }
  }
  return true;
}

bool metadata_empty(const nlohmann::json& m) { return m.is_null() || (m.is_object() && m.empty()); }

}  // namespace

const Entry* Container::find(std::string_view name) const {
  for (const Entry& e : entries) {
    if (e.name == name) return &e;
  }
  return nullptr;
}

void validate(const Container& c) {
  if (c.entries.size() > std::numeric_limits<std::uint32_t>::max()) {
    throw Error(Errc::kInvalidContainer, "too many entries");
  }
  std::unordered_set<std::string_view> names;
  for (const Entry& e : c.entries) {
    if (e.name.empty() || e.name.size() > std::numeric_limits<std::uint32_t>::max() || !valid_utf8(e.name)) {
      throw Error(Errc::kInvalidContainer, "entry name must be non-empty UTF-8");
    }
    if (!names.insert(e.name).second) throw Error(Errc::kDuplicateName, "duplicate entry '" + e.name + "'");
    std::uint64_t n;
    if (!checked_numel(e.dims, &n) || n != e.values.size()) {
      throw Error(Errc::kInvalidContainer, "entry '" + e.name + "': payload does not match dims");
    }
  }
  if (!metadata_empty(c.metadata) && !c.metadata.is_object()) {
    throw Error(Errc::kInvalidContainer, "metadata must be a key/value object");
  }
}

std::vector<std::uint8_t> encode(const Container& c) {
  validate(c);
  Writer w;
  w.raw(std::string_view(kMagic, 4));
  w.u32(kVersion);
  w.u32(static_cast<std::uint32_t>(c.entries.size()));
  for (const Entry& e : c.entries) {
    w.u32(static_cast<std::uint32_t>(e.name.size()));
    w.raw(e.name);
    w.u32(static_cast<std::uint32_t>(e.dims.size()));
    for (std::uint64_t d : e.dims) w.u64(d);
    w.u8(kDtypeFloat32);
    for (float v : e.values) w.f32(v);
  }
  std::string meta;
  if (!metadata_empty(c.metadata)) {
    try {
      meta = c.metadata.dump();
    } catch (const nlohmann::json::exception& ex) {
      throw Error(Errc::kInvalidContainer, std::string("metadata: ") + ex.what());
    }
  }
  if (meta.size() > std::numeric_limits<std::uint32_t>::max()) {
    throw Error(Errc::kInvalidContainer, "metadata too large");
  }
  w.u32(static_cast<std::uint32_t>(meta.size()));
  w.raw(meta);
  return w.take();
}

Container decode(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  std::string magic;
  if (!r.str(4, &magic)) throw Error(Errc::kTruncated, "file shorter than the magic");
  if (magic != std::string_view(kMagic, 4)) throw Error(Errc::kBadMagic, "not a COSE container");
  std::uint32_t version;
  if (!r.u32(&version)) throw Error(Errc::kTruncated, "header: version");
  if (version != kVersion) throw Error(Errc::kUnsupportedVersion, "version " + std::to_string(version));
  std::uint32_t count;
  if (!r.u32(&count)) throw Error(Errc::kTruncated, "header: entry count");

  Container c;
  std::unordered_set<std::string> names;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string where = "entry #" + std::to_string(i);
    std::uint32_t name_len;
    if (!r.u32(&name_len)) throw Error(Errc::kTruncated, where + ": name length");
    Entry e;
    if (!r.str(name_len, &e.name)) throw Error(Errc::kTruncated, where + ": name");
    if (e.name.empty() || !valid_utf8(e.name)) throw Error(Errc::kInvalidContainer, where + ": bad name");
    const std::string named = where + " '" + e.name + "'";
    std::uint32_t rank;
    if (!r.u32(&rank)) throw Error(Errc::kTruncated, named + ": rank");
    if (rank > r.remaining() / 8) throw Error(Errc::kTruncated, named + ": dims");
    e.dims.resize(rank);
    for (auto& d : e.dims) r.u64(&d);
    std::uint8_t dtype;
    if (!r.u8(&dtype)) throw Error(Errc::kTruncated, named + ": dtype");
    if (dtype != kDtypeFloat32) throw Error(Errc::kInvalidContainer, named + ": unsupported dtype " + std::to_string(dtype));
    std::uint64_t n;
    if (!checked_numel(e.dims, &n) || n > r.remaining() / 4) {
      throw Error(Errc::kTruncated, named + ": payload");
    }
    r.floats(static_cast<std::size_t>(n), &e.values);
    if (!names.insert(e.name).second) throw Error(Errc::kDuplicateName, "duplicate entry '" + e.name + "'");
    c.entries.push_back(std::move(e));
  }
  std::uint32_t meta_len;
  if (!r.u32(&meta_len)) throw Error(Errc::kTruncated, "metadata length");
  std::string meta;
  if (!r.str(meta_len, &meta)) throw Error(Errc::kTruncated, "metadata");
  if (r.remaining() != 0) throw Error(Errc::kInvalidContainer, "trailing bytes after metadata");
  if (!meta.empty()) {
    if (!valid_utf8(meta)) throw Error(Errc::kInvalidContainer, "metadata is not UTF-8");
    if (!nesting_within(meta, 128)) throw Error(Errc::kInvalidContainer, "metadata nested too deeply");
    try {
      c.metadata = nlohmann::json::parse(meta);
    } catch (const nlohmann::json::exception& ex) {
      throw Error(Errc::kInvalidContainer, std::string("metadata: ") + ex.what());
    }
    if (!c.metadata.is_object()) throw Error(Errc::kInvalidContainer, "metadata must be a key/value object");
  }
  return c;
}

void write(const Container& c, const std::filesystem::path& path) {
  const auto bytes = encode(c);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::kIo, "cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(Errc::kIo, "write failed for '" + path.string() + "'");
}

Container read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kIo, "cannot open '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(Errc::kIo, "read failed for '" + path.string() + "'");
  return decode(bytes);
}

}  // namespace cose::interchange
