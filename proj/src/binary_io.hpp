/*
 * Copyright (C) 2026 The teamcoord authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 *
 */

#pragma once

// Little-endian scalar I/O independent of the host byte order.

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace teamcoord::binary {

inline void write_u32(std::ostream& out, std::uint32_t x)
{
  char bytes[4];
  for (int i = 0; i < 4; ++i)
    bytes[i] = static_cast<char>((x >> (8 * i)) & 0xff);
  out.write(bytes, 4);
}

inline void write_u64(std::ostream& out, std::uint64_t x)
{
  char bytes[8];
  for (int i = 0; i < 8; ++i)
    bytes[i] = static_cast<char>((x >> (8 * i)) & 0xff);
  out.write(bytes, 8);
}

inline void write_f64(std::ostream& out, double x) { write_u64(out, std::bit_cast<std::uint64_t>(x)); }

inline std::uint64_t read_uint(std::istream& in, int width)
{
  unsigned char bytes[8] = {};
  in.read(reinterpret_cast<char*>(bytes), width);
  if (in.gcount() != width)
    throw std::runtime_error("unexpected end of binary data");
  std::uint64_t x = 0;
  for (int i = width - 1; i >= 0; --i)
    x = (x << 8) | bytes[i];
  return x;
}

inline std::uint32_t read_u32(std::istream& in) { return static_cast<std::uint32_t>(read_uint(in, 4)); }
inline std::uint64_t read_u64(std::istream& in) { return read_uint(in, 8); }
inline double read_f64(std::istream& in) { return std::bit_cast<double>(read_u64(in)); }

inline void write_magic(std::ostream& out, const char (&magic)[5]) { out.write(magic, 4); }

inline void expect_magic(std::istream& in, const char (&magic)[5])
{
  char got[4] = {};
  in.read(got, 4);
  if (in.gcount() != 4 || std::memcmp(got, magic, 4) != 0)
    throw std::runtime_error(std::string("bad magic, expected ") + magic);
}

} // namespace teamcoord::binary
