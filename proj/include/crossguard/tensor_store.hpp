// Copyright 2026 The Crossguard Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CROSSGUARD__TENSOR_STORE_HPP_
#define CROSSGUARD__TENSOR_STORE_HPP_

#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "crossguard/common.hpp"

namespace crossguard
{

/// Named double matrices in a flat little-endian binary file. Matrices are
/// written row major regardless of Eigen storage order.
class TensorStore
{
public:
  void put(const std::string & name, const Eigen::MatrixXd & m) { tensors_[name] = m; }

  const Eigen::MatrixXd & get(const std::string & name) const
  {
    auto it = tensors_.find(name);
    if (it == tensors_.end()) throw SchemaError("tensor store has no entry: " + name);
    return it->second;
  }

  bool contains(const std::string & name) const { return tensors_.count(name) != 0; }
  std::size_t size() const { return tensors_.size(); }

  void save(const std::string & path) const
  {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot open for write: " + path);
    write_bytes(os, kMagic, 4);
    write_u32(os, 1);
    write_u32(os, static_cast<std::uint32_t>(tensors_.size()));
    for (const auto & [name, m] : tensors_) {
      write_u32(os, static_cast<std::uint32_t>(name.size()));
      write_bytes(os, name.data(), name.size());
      write_u64(os, static_cast<std::uint64_t>(m.rows()));
      write_u64(os, static_cast<std::uint64_t>(m.cols()));
      for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
          write_f64(os, m(r, c));
        }
      }
    }
    if (!os) throw Error("write failed: " + path);
  }

  static TensorStore load(const std::string & path)
  {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("cannot open for read: " + path);
    char magic[4];
    read_bytes(is, magic, 4);
    if (std::memcmp(magic, kMagic, 4) != 0) throw SchemaError("not a tensor store: " + path);
    if (read_u32(is) != 1) throw SchemaError("unsupported tensor store version");
    const std::uint32_t count = read_u32(is);
    TensorStore store;
    for (std::uint32_t i = 0; i < count; ++i) {
      const std::uint32_t name_len = read_u32(is);
      std::string name(name_len, '\0');
      read_bytes(is, name.data(), name_len);
      const std::uint64_t rows = read_u64(is);
      const std::uint64_t cols = read_u64(is);
      Eigen::MatrixXd m(rows, cols);
      for (std::uint64_t r = 0; r < rows; ++r) {
        for (std::uint64_t c = 0; c < cols; ++c) {
          m(r, c) = read_f64(is);
        }
      }
      store.tensors_[name] = std::move(m);
    }
    if (!is) throw SchemaError("truncated tensor store: " + path);
    return store;
  }

private:
  static constexpr const char kMagic[5] = "CGTS";

  static void write_bytes(std::ostream & os, const char * p, std::size_t n)
  {
    os.write(p, static_cast<std::streamsize>(n));
  }
  static void write_u32(std::ostream & os, std::uint32_t v)
  {
    char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    write_bytes(os, b, 4);
  }
  static void write_u64(std::ostream & os, std::uint64_t v)
  {
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    write_bytes(os, b, 8);
  }
  static void write_f64(std::ostream & os, double v)
  {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    write_u64(os, bits);
  }
  static void read_bytes(std::istream & is, char * p, std::size_t n)
  {
    is.read(p, static_cast<std::streamsize>(n));
    if (is.gcount() != static_cast<std::streamsize>(n)) throw SchemaError("truncated tensor store");
  }
  static std::uint32_t read_u32(std::istream & is)
  {
    char b[4];
    read_bytes(is, b, 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(b[i])) << (8 * i);
    return v;
  }
  static std::uint64_t read_u64(std::istream & is)
  {
    char b[8];
    read_bytes(is, b, 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(b[i])) << (8 * i);
    return v;
  }
  static double read_f64(std::istream & is)
  {
    const std::uint64_t bits = read_u64(is);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }

  std::map<std::string, Eigen::MatrixXd> tensors_;
};

}  // namespace crossguard

#endif  // CROSSGUARD__TENSOR_STORE_HPP_
