#pragma once

#include <bit>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>

#include "opkit/tensor.hpp"

// Little-endian primitives and the shared named-tensor record layout used by
// both container formats: {name_len u32, name, dtype u8 (0 = f64, 1 = c128),
// ndim u8, dims u64[], payload}.
namespace opkit::io::detail {

inline void put_bytes(std::ostream& os, const void* data, std::size_t n) {
  os.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
}

inline void put_u8(std::ostream& os, std::uint8_t v) { put_bytes(os, &v, 1); }

inline void put_u32(std::ostream& os, std::uint32_t v) {
  std::uint8_t b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<std::uint8_t>(v >> (8 * i));
  put_bytes(os, b, 4);
}

inline void put_u64(std::ostream& os, std::uint64_t v) {
  std::uint8_t b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<std::uint8_t>(v >> (8 * i));
  put_bytes(os, b, 8);
}

inline void put_f64(std::ostream& os, double v) {
  put_u64(os, std::bit_cast<std::uint64_t>(v));
}

inline void need(std::istream& is, const char* what) {
  if (!is)
    throw std::runtime_error(std::string("file truncated at ") + what);
}

inline std::uint8_t get_u8(std::istream& is, const char* what) {
  char c;
  is.read(&c, 1);
  need(is, what);
  return static_cast<std::uint8_t>(c);
}

inline std::uint32_t get_u32(std::istream& is, const char* what) {
  char b[4];
  is.read(b, 4);
  need(is, what);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i)
    v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(b[i])) << (8 * i);
  return v;
}

inline std::uint64_t get_u64(std::istream& is, const char* what) {
  char b[8];
  is.read(b, 8);
  need(is, what);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i)
    v |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(b[i])) << (8 * i);
  return v;
}

inline double get_f64(std::istream& is, const char* what) {
  return std::bit_cast<double>(get_u64(is, what));
}

inline std::string get_str(std::istream& is, std::size_t n, const char* what) {
  std::string s(n, '\0');
  is.read(s.data(), static_cast<std::streamsize>(n));
  need(is, what);
  return s;
}

inline void write_record(std::ostream& os, const std::string& name,
                         const Tensor& t) {
  put_u32(os, static_cast<std::uint32_t>(name.size()));
  put_bytes(os, name.data(), name.size());
  put_u8(os, t.is_complex() ? 1 : 0);
  put_u8(os, static_cast<std::uint8_t>(t.rank()));
  for (std::int64_t k = 0; k < t.rank(); ++k)
    put_u64(os, static_cast<std::uint64_t>(t.dim(k)));
  if (t.is_real()) {
    for (std::int64_t i = 0; i < t.numel(); ++i) put_f64(os, t.rat(i));
  } else {
    for (std::int64_t i = 0; i < t.numel(); ++i) {
      put_f64(os, t.cat(i).real());
      put_f64(os, t.cat(i).imag());
    }
  }
}

// Returns false at a clean end of stream, throws on a torn record.
inline bool read_record(std::istream& is, std::string& name, Tensor& value,
                        bool requires_grad) {
  char probe;
  is.read(&probe, 1);
  if (is.eof()) return false;
  need(is, "record");
  is.putback(probe);
  const std::uint32_t name_len = get_u32(is, "name length");
  name = get_str(is, name_len, "name");
  const std::uint8_t dtype = get_u8(is, "dtype");
  if (dtype > 1)
    throw std::runtime_error("record " + name + " has unknown dtype " +
                             std::to_string(dtype));
  const std::uint8_t ndim = get_u8(is, "ndim");
  Shape shape;
  std::int64_t numel = 1;
  for (std::uint8_t k = 0; k < ndim; ++k) {
    const std::uint64_t d = get_u64(is, "dims");
    shape.push_back(static_cast<std::int64_t>(d));
    numel *= static_cast<std::int64_t>(d);
  }
  if (dtype == 0) {
    std::vector<double> payload(static_cast<std::size_t>(numel));
    for (auto& v : payload) v = get_f64(is, name.c_str());
    value = Tensor::from_values(shape, std::move(payload), requires_grad);
  } else {
    std::vector<std::complex<double>> payload(static_cast<std::size_t>(numel));
    for (auto& v : payload) {
      const double re = get_f64(is, name.c_str());
      const double im = get_f64(is, name.c_str());
      v = {re, im};
    }
    value = Tensor::from_complex(shape, std::move(payload), requires_grad);
  }
  return true;
}

}  // namespace opkit::io::detail
