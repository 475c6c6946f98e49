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

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <regex>

#include <fmt/format.h>

#ifdef TUMORBENCH_HAVE_CURL
#include <curl/curl.h>
#endif

#include "tumorbench/error.hpp"
#include "tumorbench/hdf5_file.hpp"
#include "tumorbench/model.hpp"

namespace tumorbench::model {

namespace {

std::string normalize(std::string name) {
  std::replace(name.begin(), name.end(), '/', '_');
  return name;
}

// Keras numbers unnamed layers ("conv2d", "conv2d_1", ...) from a process-wide
// counter, so the digits depend on what was built before. Such layers are
// matched by the rank of their number, which follows creation order.
// Returns {"", 0} for named layers.
std::pair<std::string, long> auto_name(const std::string& name) {
  static const std::regex pattern("(conv2d|batch_normalization|separable_conv2d|depthwise_conv2d|dense)(?:_([0-9]+))?");
  std::smatch m;
  if (!std::regex_match(name, m, pattern)) return {"", 0};
  return {m[1].str(), m[2].matched ? std::stol(m[2].str()) : 0};
}

// Group paths (or layer names) of each auto-named class, in creation order.
using AutoIndex = std::map<std::string, std::vector<std::string>>;

void sort_by_number(AutoIndex& index) {
  for (auto& [cls, items] : index) {
    std::stable_sort(items.begin(), items.end(), [](const std::string& a, const std::string& b) {
      return auto_name(a.substr(a.rfind('/') + 1)).second < auto_name(b.substr(b.rfind('/') + 1)).second;
    });
  }
}

// "conv1/conv/kernel:0" -> "kernel".
std::string weight_suffix(const std::string& weight_name) {
  std::string s = weight_name.substr(weight_name.rfind('/') + 1);
  if (const auto colon = s.find(':'); colon != std::string::npos) s.resize(colon);
  return s;
}

#ifdef TUMORBENCH_HAVE_CURL
std::size_t write_chunk(char* data, std::size_t size, std::size_t count, void* user) {
  return std::fwrite(data, size, count, static_cast<std::FILE*>(user)) * size;
}

bool download(const std::string& url, const std::filesystem::path& dest) {
  const std::filesystem::path partial = dest.string() + ".part";
  std::FILE* out = std::fopen(partial.c_str(), "wb");
  if (out == nullptr) return false;
  CURL* curl = curl_easy_init();
  bool ok = false;
  if (curl != nullptr) {
    curl_easy_setopt(curl, CURLOPT_URL, url.c_str());
    curl_easy_setopt(curl, CURLOPT_FOLLOWLOCATION, 1L);
    curl_easy_setopt(curl, CURLOPT_FAILONERROR, 1L);
    curl_easy_setopt(curl, CURLOPT_CONNECTTIMEOUT, 20L);
    curl_easy_setopt(curl, CURLOPT_WRITEFUNCTION, write_chunk);
    curl_easy_setopt(curl, CURLOPT_WRITEDATA, out);
    ok = curl_easy_perform(curl) == CURLE_OK;
    curl_easy_cleanup(curl);
  }
  std::fclose(out);
  std::error_code ec;
  if (ok) {
    std::filesystem::rename(partial, dest, ec);
    ok = !ec;
  }
  if (!ok) std::filesystem::remove(partial, ec);
  return ok;
}
#endif

}  // namespace

std::filesystem::path resolve_pretrained_weights(BackboneKind kind) {
  const BackboneInfo& info = backbone_info(kind);
  std::vector<std::filesystem::path> dirs;
  if (const char* env = std::getenv("TUMORBENCH_WEIGHTS_DIR"); env != nullptr && *env != '\0') dirs.emplace_back(env);
  if (const char* home = std::getenv("HOME"); home != nullptr && *home != '\0')
    dirs.push_back(std::filesystem::path(home) / ".keras" / "models");
  for (const auto& dir : dirs) {
    const auto candidate = dir / info.weights_file;
    if (std::filesystem::exists(candidate)) return candidate;
  }
#ifdef TUMORBENCH_HAVE_CURL
  for (const auto& dir : dirs) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) continue;
    const auto dest = dir / info.weights_file;
    if (download(std::string(info.weights_url), dest)) return dest;
  }
#endif
  throw Error(ErrorKind::kWeightsUnavailable,
              fmt::format("{} ImageNet weights ({}) are not cached and could not be downloaded from {}",
                          info.display_name, info.weights_file, info.weights_url));
}

std::int64_t load_keras_weights(nn::Graph& graph, const std::filesystem::path& path) {
  h5::File file = [&] {
    try {
      return h5::File::open_read(path);
    } catch (const Error& e) {
      throw Error(ErrorKind::kWeightsUnavailable, fmt::format("cannot open weights {}: {}", path.string(), e.what()));
    }
  }();
  const std::string root = file.exists("model_weights") ? "model_weights" : "/";
  if (!file.has_attribute(root, "layer_names"))
    throw Error(ErrorKind::kWeightsUnavailable, fmt::format("{} is not a Keras weights file", path.string()));
  std::map<std::string, std::string> groups;  // normalized name -> group path
  AutoIndex file_auto, graph_auto;
  for (const auto& name : file.read_string_list_attribute(root, "layer_names")) {
    const std::string group = (root == "/" ? "" : root + "/") + name;
    groups[normalize(name)] = group;
    if (const auto cls = auto_name(name).first; !cls.empty()) file_auto[cls].push_back(group);
  }
  for (std::size_t id = 1; id < graph.size(); ++id) {
    const std::string& name = graph.layer(static_cast<nn::NodeId>(id))->name();
    if (const auto cls = auto_name(name).first; !cls.empty()) graph_auto[cls].push_back(name);
  }
  sort_by_number(file_auto);
  sort_by_number(graph_auto);

  std::int64_t assigned = 0;
  for (std::size_t id = 1; id < graph.size(); ++id) {
    nn::Layer* layer = graph.layer(static_cast<nn::NodeId>(id));
    const auto params = layer->parameters();
    if (params.empty()) continue;
    std::string group;
    if (const auto cls = auto_name(layer->name()).first; !cls.empty()) {
      const auto& ours = graph_auto[cls];
      const auto rank = static_cast<std::size_t>(std::find(ours.begin(), ours.end(), layer->name()) - ours.begin());
      if (rank < file_auto[cls].size()) group = file_auto[cls][rank];
    } else if (const auto it = groups.find(normalize(layer->name())); it != groups.end()) {
      group = it->second;
    }
    if (group.empty()) {
      throw Error(ErrorKind::kWeightsUnavailable,
                  fmt::format("{} has no weights for layer {}", path.string(), layer->name()));
    }
    const auto names = file.read_string_list_attribute(group, "weight_names");
    if (names.size() != params.size()) {
      throw Error(ErrorKind::kWeightsUnavailable,
                  fmt::format("layer {}: file has {} weights, model has {}", layer->name(), names.size(), params.size()));
    }
    for (std::size_t k = 0; k < params.size(); ++k) {
      nn::Parameter* p = params[k];
      const std::string want = weight_suffix(p->name);
      // Prefer a suffix match; fall back to positional order.
      std::size_t pick = k;
      for (std::size_t j = 0; j < names.size(); ++j)
        if (weight_suffix(names[j]) == want) pick = j;
      const std::string dataset = group + "/" + names[pick];
      const auto dims = file.dims(dataset);
      const Shape& shape = p->value.shape();
      if (!std::equal(dims.begin(), dims.end(), shape.begin(), shape.end(),
                      [](std::uint64_t a, std::int64_t b) { return static_cast<std::int64_t>(a) == b; })) {
        throw Error(ErrorKind::kWeightsUnavailable,
                    fmt::format("weight {} has shape {} in the file", p->name, fmt::join(dims, "x")));
      }
      const auto values = file.read_floats(dataset);
      std::copy(values.begin(), values.end(), p->value.data());
      ++assigned;
    }
  }
  return assigned;
}

void save_keras_weights(nn::Graph& graph, const std::filesystem::path& path) {
  h5::File file = h5::File::create(path);
  std::vector<std::string> layer_names;
  for (std::size_t id = 1; id < graph.size(); ++id) {
    nn::Layer* layer = graph.layer(static_cast<nn::NodeId>(id));
    const auto params = layer->parameters();
    if (params.empty()) continue;
    layer_names.push_back(layer->name());
    file.create_group(layer->name());
    std::vector<std::string> weight_names;
    for (const nn::Parameter* p : params) {
      const std::string wname = p->name + ":0";
      weight_names.push_back(wname);
      std::vector<std::uint64_t> dims(p->value.shape().begin(), p->value.shape().end());
      file.write_floats(layer->name() + "/" + wname, dims, p->value.span());
    }
    file.write_string_list_attribute(layer->name(), "weight_names", weight_names);
  }
  file.write_string_list_attribute("/", "layer_names", layer_names);
}

}  // namespace tumorbench::model
