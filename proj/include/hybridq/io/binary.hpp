#pragma once

#include <cstdint>
#include <bit>
#include <cstring>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "hybridq/core/quantile_grid.hpp"
#include "hybridq/core/types.hpp"
#include "hybridq/error.hpp"

namespace hybridq::io {

// Little-endian host assumed; values are copied bit for bit so floating
// point round trips are exact.
static_assert(std::endian::native == std::endian::little, "binary container assumes a little-endian host");

class BinaryWriter {
 public:
  template <typename T>
    requires std::is_arithmetic_v<T>
  void put(T v) {
    char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    buf_.append(b, sizeof(T));
  }

  void put_bool(bool v) { put<std::uint8_t>(v ? 1 : 0); }

  void put_string(std::string_view s) {
    put<std::uint64_t>(s.size());
    buf_.append(s.data(), s.size());
  }

  template <typename T>
  void put_vector(const std::vector<T>& v) {
    put<std::uint64_t>(v.size());
    for (const T& x : v) put<T>(x);
  }

  void put_strings(const std::vector<std::string>& v) {
    put<std::uint64_t>(v.size());
    for (const auto& s : v) put_string(s);
  }

  template <typename Derived>
  void put_matrix(const Eigen::DenseBase<Derived>& m) {
    using S = typename Derived::Scalar;
    put<std::int64_t>(m.rows());
    put<std::int64_t>(m.cols());
    for (Index i = 0; i < m.rows(); ++i) {
      for (Index j = 0; j < m.cols(); ++j) put<S>(m(i, j));
    }
  }

  void put_grid(const QuantileGrid& g) { put_vector(g.levels()); }

  const std::string& bytes() const { return buf_; }

 private:
  std::string buf_;
};

class BinaryReader {
 public:
  explicit BinaryReader(std::string_view data) : data_(data) {}

  template <typename T>
    requires std::is_arithmetic_v<T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, data_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }

  bool get_bool() {
    const auto b = get<std::uint8_t>();
    if (b > 1) throw InputError("corrupt boolean in model container");
    return b == 1;
  }

  std::string get_string() {
    const auto n = length(1);
    std::string s(data_.substr(pos_, n));
    pos_ += n;
    return s;
  }

  template <typename T>
  std::vector<T> get_vector() {
    const auto n = length(sizeof(T));
    std::vector<T> v(n);
    for (auto& x : v) x = get<T>();
    return v;
  }

  std::vector<std::string> get_strings() {
    const auto n = length(sizeof(std::uint64_t));
    std::vector<std::string> v;
    v.reserve(n);
    for (std::size_t i = 0; i < n; ++i) v.push_back(get_string());
    return v;
  }

  template <typename S>
  RowMatrix<S> get_matrix() {
    const auto r = get<std::int64_t>(), c = get<std::int64_t>();
    if (r < 0 || c < 0 || (c > 0 && static_cast<std::uint64_t>(r) > remaining() / sizeof(S) / static_cast<std::uint64_t>(c))) {
      throw InputError("corrupt matrix shape in model container");
    }
    RowMatrix<S> m(r, c);
    for (Index i = 0; i < r; ++i) {
      for (Index j = 0; j < c; ++j) m(i, j) = get<S>();
    }
    return m;
  }

  QuantileGrid get_grid() { return QuantileGrid(get_vector<double>()); }

  std::size_t remaining() const { return data_.size() - pos_; }
  bool done() const { return pos_ == data_.size(); }

 private:
  void need(std::size_t n) const {
    if (remaining() < n) throw InputError("model container is truncated");
  }

  std::size_t length(std::size_t element_bytes) {
    const auto n = get<std::uint64_t>();
    if (n > remaining() / element_bytes) throw InputError("corrupt length in model container");
    return static_cast<std::size_t>(n);
  }

  std::string_view data_;
  std::size_t pos_ = 0;
};

inline constexpr std::string_view kMagic = "HYBRIDQ\x01";
inline constexpr std::uint32_t kFormatVersion = 1;

// Header: magic, format version, payload kind tag.
inline void write_header(BinaryWriter& w, std::string_view kind) {
  for (char c : kMagic) w.put<char>(c);
  w.put<std::uint32_t>(kFormatVersion);
  w.put_string(kind);
}

inline void read_header(BinaryReader& r, std::string_view kind) {
  for (char c : kMagic) {
    if (r.get<char>() != c) throw InputError("not a model container (bad magic)");
  }
  const auto version = r.get<std::uint32_t>();
  if (version != kFormatVersion) {
    throw InputError("unsupported container version " + std::to_string(version) + " (expected " +
                     std::to_string(kFormatVersion) + ")");
  }
  const auto found = r.get_string();
  if (found != kind) throw InputError("container holds '" + found + "', expected '" + std::string(kind) + "'");
}

}  // namespace hybridq::io
