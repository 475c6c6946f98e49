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

#include "tumorbench/hdf5_file.hpp"

#include <hdf5.h>

#include <array>
#include <cstring>
#include <fstream>
#include <mutex>
#include <sstream>

#include <fmt/format.h>

#include "tumorbench/error.hpp"

namespace tumorbench::h5 {

namespace {

void silence_library() {
  static std::once_flag once;
  std::call_once(once, [] { H5Eset_auto2(H5E_DEFAULT, nullptr, nullptr); });
}

// Scoped hid_t with the matching close function.
class Id {
 public:
  Id(hid_t id, herr_t (*close)(hid_t)) : id_(id), close_(close) {}
  Id(Id&& other) noexcept : id_(other.id_), close_(other.close_) { other.id_ = -1; }
  Id(const Id&) = delete;
  Id& operator=(const Id&) = delete;
  ~Id() {
    if (id_ >= 0) close_(id_);
  }
  hid_t get() const { return id_; }
  bool ok() const { return id_ >= 0; }

 private:
  hid_t id_;
  herr_t (*close_)(hid_t);
};

[[noreturn]] void fail(const std::filesystem::path& file, const std::string& what) {
  throw Error(ErrorKind::kIo, fmt::format("{}: {}", file.string(), what));
}

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> parts;
  std::stringstream ss(path);
  std::string part;
  while (std::getline(ss, part, '/'))
    if (!part.empty()) parts.push_back(part);
  return parts;
}

hid_t to_hid(std::int64_t id) { return static_cast<hid_t>(id); }

Id open_dataset(std::int64_t file, const std::filesystem::path& p, const std::string& name) {
  Id ds(H5Dopen2(to_hid(file), name.c_str(), H5P_DEFAULT), H5Dclose);
  if (!ds.ok()) fail(p, fmt::format("cannot open dataset '{}'", name));
  return ds;
}

std::vector<hsize_t> dataset_dims(hid_t ds) {
  Id space(H5Dget_space(ds), H5Sclose);
  const int rank = H5Sget_simple_extent_ndims(space.get());
  std::vector<hsize_t> dims(static_cast<std::size_t>(std::max(rank, 0)));
  if (rank > 0) H5Sget_simple_extent_dims(space.get(), dims.data(), nullptr);
  return dims;
}

std::size_t count(const std::vector<hsize_t>& dims) {
  std::size_t n = 1;
  for (hsize_t d : dims) n *= static_cast<std::size_t>(d);
  return n;
}

template <typename T>
std::vector<T> read_all(std::int64_t file, const std::filesystem::path& p, const std::string& name,
                        hid_t mem_type) {
  Id ds = open_dataset(file, p, name);
  std::vector<T> out(count(dataset_dims(ds.get())));
  if (!out.empty() && H5Dread(ds.get(), mem_type, H5S_ALL, H5S_ALL, H5P_DEFAULT, out.data()) < 0)
    fail(p, fmt::format("cannot read dataset '{}'", name));
  return out;
}

void write_all(std::int64_t file, const std::filesystem::path& p, const std::string& name,
               const std::vector<std::uint64_t>& dims, hid_t file_type, hid_t mem_type, const void* data) {
  std::vector<hsize_t> d(dims.begin(), dims.end());
  Id space(H5Screate_simple(static_cast<int>(d.size()), d.data(), nullptr), H5Sclose);
  Id lcpl(H5Pcreate(H5P_LINK_CREATE), H5Pclose);
  H5Pset_create_intermediate_group(lcpl.get(), 1);
  Id ds(H5Dcreate2(to_hid(file), name.c_str(), file_type, space.get(), lcpl.get(), H5P_DEFAULT, H5P_DEFAULT),
        H5Dclose);
  if (!ds.ok()) fail(p, fmt::format("cannot create dataset '{}'", name));
  if (H5Dwrite(ds.get(), mem_type, H5S_ALL, H5S_ALL, H5P_DEFAULT, data) < 0)
    fail(p, fmt::format("cannot write dataset '{}'", name));
}

Id open_object(std::int64_t file, const std::filesystem::path& p, const std::string& object) {
  Id obj(H5Oopen(to_hid(file), object.empty() ? "/" : object.c_str(), H5P_DEFAULT), H5Oclose);
  if (!obj.ok()) fail(p, fmt::format("cannot open object '{}'", object));
  return obj;
}

Id open_attribute(std::int64_t file, const std::filesystem::path& p, const std::string& object,
                  const std::string& name) {
  Id obj = open_object(file, p, object);
  Id attr(H5Aopen(obj.get(), name.c_str(), H5P_DEFAULT), H5Aclose);
  if (!attr.ok()) fail(p, fmt::format("missing attribute '{}' on '{}'", name, object));
  return attr;
}

std::vector<std::string> read_strings(hid_t attr, const std::filesystem::path& p) {
  Id type(H5Aget_type(attr), H5Tclose);
  Id space(H5Aget_space(attr), H5Sclose);
  const hssize_t n = H5Sget_simple_extent_npoints(space.get());
  std::vector<std::string> out;
  if (H5Tget_class(type.get()) != H5T_STRING) fail(p, "attribute is not a string");
  if (H5Tis_variable_str(type.get()) > 0) {
    std::vector<char*> raw(static_cast<std::size_t>(n), nullptr);
    Id mem(H5Tcopy(H5T_C_S1), H5Tclose);
    H5Tset_size(mem.get(), H5T_VARIABLE);
    H5Tset_cset(mem.get(), H5Tget_cset(type.get()));
    if (H5Aread(attr, mem.get(), raw.data()) < 0) fail(p, "cannot read string attribute");
    for (char* s : raw) out.emplace_back(s ? s : "");
    H5Dvlen_reclaim(mem.get(), space.get(), H5P_DEFAULT, raw.data());
  } else {
    const std::size_t width = H5Tget_size(type.get());
    std::vector<char> raw(width * static_cast<std::size_t>(n));
    if (H5Aread(attr, type.get(), raw.data()) < 0) fail(p, "cannot read string attribute");
    for (hssize_t i = 0; i < n; ++i) {
      const char* s = raw.data() + static_cast<std::size_t>(i) * width;
      out.emplace_back(s, strnlen(s, width));
    }
  }
  return out;
}

}  // namespace

File File::open_read(const std::filesystem::path& path) {
  silence_library();
  if (!std::filesystem::exists(path)) fail(path, "no such file");
  const hid_t id = H5Fopen(path.c_str(), H5F_ACC_RDONLY, H5P_DEFAULT);
  if (id < 0) fail(path, "not a readable HDF5 file");
  return File(id, path);
}

File File::create(const std::filesystem::path& path, std::uint64_t userblock) {
  silence_library();
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  Id fcpl(H5Pcreate(H5P_FILE_CREATE), H5Pclose);
  if (userblock > 0) H5Pset_userblock(fcpl.get(), userblock);
  const hid_t id = H5Fcreate(path.c_str(), H5F_ACC_TRUNC, fcpl.get(), H5P_DEFAULT);
  if (id < 0) fail(path, "cannot create HDF5 file");
  return File(id, path);
}

File::File(File&& other) noexcept : id_(other.id_), path_(std::move(other.path_)) { other.id_ = -1; }

File& File::operator=(File&& other) noexcept {
  if (this != &other) {
    if (id_ >= 0) H5Fclose(to_hid(id_));
    id_ = other.id_;
    path_ = std::move(other.path_);
    other.id_ = -1;
  }
  return *this;
}

File::~File() {
  if (id_ >= 0) H5Fclose(to_hid(id_));
}

bool File::exists(const std::string& path) const {
  std::string prefix;
  for (const auto& part : split_path(path)) {
    prefix += "/" + part;
    if (H5Lexists(to_hid(id_), prefix.c_str(), H5P_DEFAULT) <= 0) return false;
  }
  return true;
}

bool File::is_group(const std::string& path) const {
  if (!exists(path)) return false;
  H5O_info_t info;
  if (H5Oget_info_by_name(to_hid(id_), path.c_str(), &info, H5P_DEFAULT) < 0) return false;
  return info.type == H5O_TYPE_GROUP;
}

std::vector<std::string> File::list(const std::string& group) const {
  Id g(H5Gopen2(to_hid(id_), group.empty() ? "/" : group.c_str(), H5P_DEFAULT), H5Gclose);
  if (!g.ok()) fail(path_, fmt::format("cannot open group '{}'", group));
  H5G_info_t info;
  H5Gget_info(g.get(), &info);
  std::vector<std::string> names;
  for (hsize_t i = 0; i < info.nlinks; ++i) {
    const ssize_t len =
        H5Lget_name_by_idx(g.get(), ".", H5_INDEX_NAME, H5_ITER_INC, i, nullptr, 0, H5P_DEFAULT);
    std::string name(static_cast<std::size_t>(len), '\0');
    H5Lget_name_by_idx(g.get(), ".", H5_INDEX_NAME, H5_ITER_INC, i, name.data(), name.size() + 1, H5P_DEFAULT);
    names.push_back(std::move(name));
  }
  return names;
}

std::vector<std::uint64_t> File::dims(const std::string& dataset) const {
  Id ds = open_dataset(id_, path_, dataset);
  auto d = dataset_dims(ds.get());
  return {d.begin(), d.end()};
}

std::vector<double> File::read_doubles(const std::string& dataset) const {
  return read_all<double>(id_, path_, dataset, H5T_NATIVE_DOUBLE);
}

std::vector<float> File::read_floats(const std::string& dataset) const {
  return read_all<float>(id_, path_, dataset, H5T_NATIVE_FLOAT);
}

std::vector<std::int64_t> File::read_ints(const std::string& dataset) const {
  return read_all<std::int64_t>(id_, path_, dataset, H5T_NATIVE_INT64);
}

void File::read_float_slab(const std::string& dataset, std::uint64_t index, std::span<float> out) const {
  Id ds = open_dataset(id_, path_, dataset);
  auto d = dataset_dims(ds.get());
  if (d.empty() || index >= d[0]) fail(path_, fmt::format("slab {} out of range in '{}'", index, dataset));
  std::vector<hsize_t> start(d.size(), 0), extent = d;
  start[0] = index;
  extent[0] = 1;
  if (count(extent) != out.size()) fail(path_, fmt::format("slab size mismatch in '{}'", dataset));
  Id space(H5Dget_space(ds.get()), H5Sclose);
  H5Sselect_hyperslab(space.get(), H5S_SELECT_SET, start.data(), nullptr, extent.data(), nullptr);
  Id mem(H5Screate_simple(static_cast<int>(extent.size()), extent.data(), nullptr), H5Sclose);
  if (H5Dread(ds.get(), H5T_NATIVE_FLOAT, mem.get(), space.get(), H5P_DEFAULT, out.data()) < 0)
    fail(path_, fmt::format("cannot read slab of '{}'", dataset));
}

void File::create_group(const std::string& path) {
  if (exists(path)) return;
  Id lcpl(H5Pcreate(H5P_LINK_CREATE), H5Pclose);
  H5Pset_create_intermediate_group(lcpl.get(), 1);
  Id g(H5Gcreate2(to_hid(id_), path.c_str(), lcpl.get(), H5P_DEFAULT, H5P_DEFAULT), H5Gclose);
  if (!g.ok()) fail(path_, fmt::format("cannot create group '{}'", path));
}

void File::create_float_dataset(const std::string& path, const std::vector<std::uint64_t>& dims,
                                const std::vector<std::uint64_t>& chunk) {
  std::vector<hsize_t> d(dims.begin(), dims.end());
  Id space(H5Screate_simple(static_cast<int>(d.size()), d.data(), nullptr), H5Sclose);
  Id lcpl(H5Pcreate(H5P_LINK_CREATE), H5Pclose);
  H5Pset_create_intermediate_group(lcpl.get(), 1);
  Id dcpl(H5Pcreate(H5P_DATASET_CREATE), H5Pclose);
  if (!chunk.empty()) {
    std::vector<hsize_t> c(chunk.begin(), chunk.end());
    H5Pset_chunk(dcpl.get(), static_cast<int>(c.size()), c.data());
    H5Pset_deflate(dcpl.get(), 1);
  }
  Id ds(H5Dcreate2(to_hid(id_), path.c_str(), H5T_IEEE_F32LE, space.get(), lcpl.get(), dcpl.get(), H5P_DEFAULT),
        H5Dclose);
  if (!ds.ok()) fail(path_, fmt::format("cannot create dataset '{}'", path));
}

void File::write_floats(const std::string& path, const std::vector<std::uint64_t>& dims,
                        std::span<const float> data) {
  write_all(id_, path_, path, dims, H5T_IEEE_F32LE, H5T_NATIVE_FLOAT, data.data());
}

void File::write_ints(const std::string& path, std::span<const std::int64_t> data) {
  write_all(id_, path_, path, {data.size()}, H5T_STD_I64LE, H5T_NATIVE_INT64, data.data());
}

void File::write_u8(const std::string& path, const std::vector<std::uint64_t>& dims,
                    std::span<const std::uint8_t> data) {
  write_all(id_, path_, path, dims, H5T_STD_U8LE, H5T_NATIVE_UINT8, data.data());
}

void File::write_u16(const std::string& path, const std::vector<std::uint64_t>& dims,
                     std::span<const std::uint16_t> data) {
  write_all(id_, path_, path, dims, H5T_STD_U16LE, H5T_NATIVE_UINT16, data.data());
}

void File::write_doubles(const std::string& path, const std::vector<std::uint64_t>& dims,
                         std::span<const double> data) {
  write_all(id_, path_, path, dims, H5T_IEEE_F64LE, H5T_NATIVE_DOUBLE, data.data());
}

void File::write_i16(const std::string& path, const std::vector<std::uint64_t>& dims,
                     std::span<const std::int16_t> data) {
  write_all(id_, path_, path, dims, H5T_STD_I16LE, H5T_NATIVE_INT16, data.data());
}

void File::write_float_slab(const std::string& dataset, std::uint64_t index, std::span<const float> data) {
  Id ds = open_dataset(id_, path_, dataset);
  auto d = dataset_dims(ds.get());
  if (d.empty() || index >= d[0]) fail(path_, fmt::format("slab {} out of range in '{}'", index, dataset));
  std::vector<hsize_t> start(d.size(), 0), extent = d;
  start[0] = index;
  extent[0] = 1;
  if (count(extent) != data.size()) fail(path_, fmt::format("slab size mismatch in '{}'", dataset));
  Id space(H5Dget_space(ds.get()), H5Sclose);
  H5Sselect_hyperslab(space.get(), H5S_SELECT_SET, start.data(), nullptr, extent.data(), nullptr);
  Id mem(H5Screate_simple(static_cast<int>(extent.size()), extent.data(), nullptr), H5Sclose);
  if (H5Dwrite(ds.get(), H5T_NATIVE_FLOAT, mem.get(), space.get(), H5P_DEFAULT, data.data()) < 0)
    fail(path_, fmt::format("cannot write slab of '{}'", dataset));
}

bool File::has_attribute(const std::string& object, const std::string& name) const {
  if (!object.empty() && object != "/" && !exists(object)) return false;
  return H5Aexists_by_name(to_hid(id_), object.empty() ? "/" : object.c_str(), name.c_str(), H5P_DEFAULT) > 0;
}

std::string File::read_string_attribute(const std::string& object, const std::string& name) const {
  Id attr = open_attribute(id_, path_, object, name);
  auto values = read_strings(attr.get(), path_);
  if (values.size() != 1) fail(path_, fmt::format("attribute '{}' is not a scalar string", name));
  return values.front();
}

std::vector<std::string> File::read_string_list_attribute(const std::string& object,
                                                          const std::string& name) const {
  Id attr = open_attribute(id_, path_, object, name);
  return read_strings(attr.get(), path_);
}

void File::write_string_attribute(const std::string& object, const std::string& name, const std::string& value) {
  Id obj = open_object(id_, path_, object);
  Id type(H5Tcopy(H5T_C_S1), H5Tclose);
  H5Tset_size(type.get(), H5T_VARIABLE);
  H5Tset_cset(type.get(), H5T_CSET_UTF8);
  Id space(H5Screate(H5S_SCALAR), H5Sclose);
  if (H5Aexists(obj.get(), name.c_str()) > 0) H5Adelete(obj.get(), name.c_str());
  Id attr(H5Acreate2(obj.get(), name.c_str(), type.get(), space.get(), H5P_DEFAULT, H5P_DEFAULT), H5Aclose);
  const char* ptr = value.c_str();
  if (!attr.ok() || H5Awrite(attr.get(), type.get(), &ptr) < 0)
    fail(path_, fmt::format("cannot write attribute '{}'", name));
}

void File::write_string_list_attribute(const std::string& object, const std::string& name,
                                       const std::vector<std::string>& values) {
  Id obj = open_object(id_, path_, object);
  std::size_t width = 1;
  for (const auto& v : values) width = std::max(width, v.size());
  std::vector<char> raw(width * values.size(), '\0');
  for (std::size_t i = 0; i < values.size(); ++i) std::memcpy(raw.data() + i * width, values[i].data(), values[i].size());
  Id type(H5Tcopy(H5T_C_S1), H5Tclose);
  H5Tset_size(type.get(), width);
  H5Tset_strpad(type.get(), H5T_STR_NULLPAD);
  const hsize_t n = values.size();
  Id space(H5Screate_simple(1, &n, nullptr), H5Sclose);
  if (H5Aexists(obj.get(), name.c_str()) > 0) H5Adelete(obj.get(), name.c_str());
  Id attr(H5Acreate2(obj.get(), name.c_str(), type.get(), space.get(), H5P_DEFAULT, H5P_DEFAULT), H5Aclose);
  if (!attr.ok() || H5Awrite(attr.get(), type.get(), raw.data()) < 0)
    fail(path_, fmt::format("cannot write attribute '{}'", name));
}

std::int64_t File::read_int_attribute(const std::string& object, const std::string& name) const {
  Id attr = open_attribute(id_, path_, object, name);
  std::int64_t v = 0;
  if (H5Aread(attr.get(), H5T_NATIVE_INT64, &v) < 0) fail(path_, fmt::format("cannot read attribute '{}'", name));
  return v;
}

void File::write_int_attribute(const std::string& object, const std::string& name, std::int64_t value) {
  Id obj = open_object(id_, path_, object);
  Id space(H5Screate(H5S_SCALAR), H5Sclose);
  if (H5Aexists(obj.get(), name.c_str()) > 0) H5Adelete(obj.get(), name.c_str());
  Id attr(H5Acreate2(obj.get(), name.c_str(), H5T_STD_I64LE, space.get(), H5P_DEFAULT, H5P_DEFAULT), H5Aclose);
  if (!attr.ok() || H5Awrite(attr.get(), H5T_NATIVE_INT64, &value) < 0)
    fail(path_, fmt::format("cannot write attribute '{}'", name));
}

std::string File::read_text(const std::string& dataset) const {
  const auto bytes = read_all<std::uint8_t>(id_, path_, dataset, H5T_NATIVE_UINT8);
  return {bytes.begin(), bytes.end()};
}

void File::write_text(const std::string& path, const std::string& text) {
  write_all(id_, path_, path, {text.size()}, H5T_STD_U8LE, H5T_NATIVE_UINT8, text.data());
}

void File::flush() { H5Fflush(to_hid(id_), H5F_SCOPE_GLOBAL); }

bool looks_like_hdf5(const std::filesystem::path& path) {
  static constexpr std::array<unsigned char, 8> kSignature = {0x89, 'H', 'D', 'F', '\r', '\n', 0x1a, '\n'};
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  // The signature may sit at offset 0, 512, 1024, 2048, ...
  for (std::streamoff offset = 0; offset <= 4096; offset = offset == 0 ? 512 : offset * 2) {
    std::array<unsigned char, 8> buf{};
    in.clear();
    in.seekg(offset);
    if (!in.read(reinterpret_cast<char*>(buf.data()), buf.size())) return false;
    if (buf == kSignature) return true;
  }
  return false;
}

}  // namespace tumorbench::h5
