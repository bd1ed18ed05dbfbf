#pragma once

#include <bit>
#include <cstring>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "routelab/tensor.hpp"

namespace routelab::ad {

// ---------------------------------------------------------------------------
// Named-tensor checkpoint container.
//
//   magic "NTC1" | u32 version | u64 meta_len | meta bytes (UTF-8 JSON)
//   | u64 entry_count | entries
//   entry: u64 name_len | name | u32 ndim | i64 dims... | f64 data...
//
// All integers and doubles are little-endian.
// ---------------------------------------------------------------------------

inline constexpr char kCheckpointMagic[4] = {'N', 'T', 'C', '1'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedTensors {
  std::vector<std::pair<std::string, Tensor>> entries;

  const Tensor* find(const std::string& name) const {
    for (const auto& [n, t] : entries) {
      if (n == name) return &t;
    }
    return nullptr;
  }
};

namespace detail {

inline void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_f64(std::string& out, double d) {
  std::uint64_t bits;
  std::memcpy(&bits, &d, sizeof(bits));
  put_u64(out, bits);
}

class ByteReader {
 public:
  ByteReader(const std::string& data, const std::string& path) : data_(data), path_(path) {}

  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + static_cast<std::size_t>(i)]))
           << (8 * i);
    }
    pos_ += 8;
    return v;
  }

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data_[pos_ + static_cast<std::size_t>(i)]))
           << (8 * i);
    }
    pos_ += 4;
    return v;
  }

  double f64() {
    const std::uint64_t bits = u64();
    double d;
    std::memcpy(&d, &bits, sizeof(d));
    return d;
  }

  std::string bytes(std::size_t n) {
    need(n);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool exhausted() const { return pos_ == data_.size(); }

 private:
  void need(std::size_t n) {
    if (pos_ + n > data_.size()) throw Error("checkpoint " + path_ + ": truncated file");
  }

  const std::string& data_;
  std::string path_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline void save_checkpoint(const std::string& path, const NamedTensors& tensors,
                            const std::string& meta_json = "") {
  std::string out;
  out.append(kCheckpointMagic, sizeof(kCheckpointMagic));
  detail::put_u32(out, kCheckpointVersion);
  detail::put_u64(out, meta_json.size());
  out += meta_json;
  detail::put_u64(out, tensors.entries.size());
  for (const auto& [name, tensor] : tensors.entries) {
    detail::put_u64(out, name.size());
    out += name;
    detail::put_u32(out, static_cast<std::uint32_t>(tensor.shape().size()));
    for (int d : tensor.shape()) detail::put_u64(out, static_cast<std::uint64_t>(d));
    for (double v : tensor.value()) detail::put_f64(out, v);
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open for writing: " + path);
  os.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!os) throw Error("write failed: " + path);
}

inline NamedTensors load_checkpoint(const std::string& path, std::string* meta_json = nullptr) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open: " + path);
  std::string data((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  detail::ByteReader reader(data, path);
  const std::string magic = reader.bytes(sizeof(kCheckpointMagic));
  if (std::memcmp(magic.data(), kCheckpointMagic, sizeof(kCheckpointMagic)) != 0) {
    throw Error("checkpoint " + path + ": bad magic");
  }
  const std::uint32_t version = reader.u32();
  if (version != kCheckpointVersion) {
    throw Error("checkpoint " + path + ": unsupported format version " + std::to_string(version));
  }
  const std::uint64_t meta_len = reader.u64();
  std::string meta = reader.bytes(meta_len);
  if (meta_json) *meta_json = std::move(meta);
  const std::uint64_t count = reader.u64();
  NamedTensors out;
  for (std::uint64_t e = 0; e < count; ++e) {
    const std::uint64_t name_len = reader.u64();
    std::string name = reader.bytes(name_len);
    const std::uint32_t ndim = reader.u32();
    Shape shape;
    std::size_t n = 1;
    for (std::uint32_t d = 0; d < ndim; ++d) {
      const std::uint64_t dim = reader.u64();
      shape.push_back(static_cast<int>(dim));
      n *= static_cast<std::size_t>(dim);
    }
    std::vector<double> values(n);
    for (std::size_t i = 0; i < n; ++i) values[i] = reader.f64();
    out.entries.emplace_back(std::move(name), Tensor::leaf(std::move(shape), std::move(values), false));
  }
  if (!reader.exhausted()) throw Error("checkpoint " + path + ": trailing bytes");
  return out;
}

}  // namespace routelab::ad
