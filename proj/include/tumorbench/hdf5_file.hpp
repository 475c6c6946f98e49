/*
 * Copyright 2026 The TumorBench Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef TUMORBENCH_HDF5_FILE_HPP_
#define TUMORBENCH_HDF5_FILE_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace tumorbench::h5 {

// Minimal RAII view over the HDF5 C API covering what the pipeline stores:
// numeric datasets (optionally chunked, read by leading-axis slab) and string
// attributes. All failures throw Error{kIo}.
//
// The HDF5 library is not built thread-safe here; callers serialize access.
class File {
 public:
  static File open_read(const std::filesystem::path& path);
  // Truncates. A non-zero `userblock` reserves that many leading bytes
  // (MATLAB writes its text header there).
  static File create(const std::filesystem::path& path, std::uint64_t userblock = 0);

  File(File&& other) noexcept;
  File& operator=(File&& other) noexcept;
  File(const File&) = delete;
  File& operator=(const File&) = delete;
  ~File();

  const std::filesystem::path& path() const { return path_; }

  // True when every component of the slash-separated `path` exists.
  bool exists(const std::string& path) const;
  bool is_group(const std::string& path) const;
  std::vector<std::string> list(const std::string& group) const;

  std::vector<std::uint64_t> dims(const std::string& dataset) const;
  std::vector<double> read_doubles(const std::string& dataset) const;
  std::vector<float> read_floats(const std::string& dataset) const;
  std::vector<std::int64_t> read_ints(const std::string& dataset) const;
  // Reads element `index` along the leading axis into `out`.
  void read_float_slab(const std::string& dataset, std::uint64_t index, std::span<float> out) const;

  void create_group(const std::string& path);
  // `chunk` empty means contiguous storage; otherwise chunked + deflate.
  void create_float_dataset(const std::string& path, const std::vector<std::uint64_t>& dims,
                            const std::vector<std::uint64_t>& chunk = {});
  void write_floats(const std::string& path, const std::vector<std::uint64_t>& dims,
                    std::span<const float> data);
  void write_ints(const std::string& path, std::span<const std::int64_t> data);
  void write_float_slab(const std::string& dataset, std::uint64_t index, std::span<const float> data);
  // Raw uint8 / uint16 writers, used for MATLAB-style fixtures.
  void write_u8(const std::string& path, const std::vector<std::uint64_t>& dims,
                std::span<const std::uint8_t> data);
  void write_u16(const std::string& path, const std::vector<std::uint64_t>& dims,
                 std::span<const std::uint16_t> data);
  void write_doubles(const std::string& path, const std::vector<std::uint64_t>& dims,
                     std::span<const double> data);
  void write_i16(const std::string& path, const std::vector<std::uint64_t>& dims,
                 std::span<const std::int16_t> data);

  bool has_attribute(const std::string& object, const std::string& name) const;
  std::string read_string_attribute(const std::string& object, const std::string& name) const;
  // Reads a 1-D string array attribute (fixed- or variable-length strings).
  std::vector<std::string> read_string_list_attribute(const std::string& object,
                                                      const std::string& name) const;
  void write_string_attribute(const std::string& object, const std::string& name, const std::string& value);
  void write_string_list_attribute(const std::string& object, const std::string& name,
                                   const std::vector<std::string>& values);
  std::int64_t read_int_attribute(const std::string& object, const std::string& name) const;
  void write_int_attribute(const std::string& object, const std::string& name, std::int64_t value);

  // UTF-8 text stored as a uint8 dataset (attributes cap out at 64 KiB).
  std::string read_text(const std::string& dataset) const;
  void write_text(const std::string& path, const std::string& text);

  void flush();

 private:
  File(std::int64_t id, std::filesystem::path path) : id_(id), path_(std::move(path)) {}
  std::int64_t id_ = -1;
  std::filesystem::path path_;
};

// True when `path` starts with the HDF5 signature (optionally after a
// 512-byte MATLAB user block).
bool looks_like_hdf5(const std::filesystem::path& path);

}  // namespace tumorbench::h5

#endif  // TUMORBENCH_HDF5_FILE_HPP_
