#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>
#include "network.hpp"

namespace spikeforge {

using json = nlohmann::json;

inline constexpr const char* kNetworkFormat = "spikeforge.network";
inline constexpr int kSchemaVersion = 1;

/// Writes to a sibling temp file and renames it over `path`.
inline void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path() && !fs::exists(path.parent_path())) fs::create_directories(path.parent_path());
  std::random_device rd;
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(rd());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open '" + tmp.string() + "' for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw Error("write to '" + tmp.string() + "' failed");
    }
  }
  fs::rename(tmp, path);
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline json parse_json_text(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(source + ": " + e.what());
  }
}

namespace detail {

inline const json& field(const json& obj, const char* key, const std::string& path) {
  if (!obj.is_object()) throw ParseError(path + ": expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(path + "." + key + ": missing field");
  return *it;
}

inline double number_at(const json& j, const std::string& path) {
  if (!j.is_number()) throw ParseError(path + ": expected a number");
  return j.get<double>();
}

inline std::string string_at(const json& j, const std::string& path) {
  if (!j.is_string()) throw ParseError(path + ": expected a string");
  return j.get<std::string>();
}

inline Tensor tensor_from_json(const json& j, const std::string& path) {
  const json& js = field(j, "shape", path);
  const json& jd = field(j, "data", path);
  if (!js.is_array() || js.empty()) throw ParseError(path + ".shape: expected a non-empty array");
  Shape shape;
  for (std::size_t i = 0; i < js.size(); ++i) {
    if (!js[i].is_number_integer() || js[i].get<long long>() <= 0)
      throw ParseError(path + ".shape[" + std::to_string(i) + "]: expected a positive integer");
    shape.push_back(js[i].get<std::size_t>());
  }
  if (!jd.is_array()) throw ParseError(path + ".data: expected an array of numbers");
  std::vector<double> data;
  data.reserve(jd.size());
  for (std::size_t i = 0; i < jd.size(); ++i) data.push_back(number_at(jd[i], path + ".data[" + std::to_string(i) + "]"));
  if (shape_numel(shape) != data.size())
    throw ParseError(path + ": shape " + shape_str(shape) + " needs " + std::to_string(shape_numel(shape)) +
                     " values, data has " + std::to_string(data.size()));
  return Tensor(std::move(shape), std::move(data));
}

inline json tensor_to_json(const Tensor& t) { return json{{"shape", t.shape()}, {"data", t.values()}}; }

inline void check_header(const json& j, const char* format, const std::string& path) {
  if (auto it = j.find("format"); it != j.end() && (!it->is_string() || *it != format))
    throw ParseError(path + ".format: expected '" + std::string(format) + "'");
  if (auto it = j.find("version"); it != j.end() && (!it->is_number_integer() || *it != kSchemaVersion))
    throw ParseError(path + ".version: unsupported schema version");
}

}  // namespace detail

inline json network_to_json(const NetworkSpec& net) {
  json layers = json::array();
  for (const auto& l : net.layers) {
    json jl{{"kind", kind_name(l.kind)}, {"name", l.name}};
    std::visit(
        [&](const auto& k) {
          using K = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<K, Linear>) {
            jl["weight"] = detail::tensor_to_json(k.weight);
            jl["bias"] = detail::tensor_to_json(k.bias);
          } else if constexpr (std::is_same_v<K, SoftMax>) {
            jl["axis"] = k.axis;
          } else if constexpr (std::is_same_v<K, AttentionHead>) {
            jl["wq"] = detail::tensor_to_json(k.wq);
            jl["wk"] = detail::tensor_to_json(k.wk);
            jl["wv"] = detail::tensor_to_json(k.wv);
            jl["wo"] = detail::tensor_to_json(k.wo);
            jl["scale"] = k.scale;
            if (!k.softmax_slot.empty()) jl["softmax_slot"] = k.softmax_slot;
          } else if constexpr (std::is_same_v<K, NeuronSlot>) {
            jl["id"] = k.id;
          }
        },
        l.kind);
    layers.push_back(std::move(jl));
  }
  return json{{"format", kNetworkFormat}, {"version", kSchemaVersion}, {"input_dim", net.input_dim}, {"layers", layers}};
}

/// Parses and validates a network document. Errors carry the offending field path.
inline NetworkSpec network_from_json(const json& j, const std::string& root = "$") {
  using namespace detail;
  check_header(j, kNetworkFormat, root);
  NetworkSpec net;
  const json& jd = field(j, "input_dim", root);
  if (!jd.is_number_integer() || jd.get<long long>() <= 0)
    throw ParseError(root + ".input_dim: expected a positive integer");
  net.input_dim = jd.get<std::size_t>();
  const json& jl = field(j, "layers", root);
  if (!jl.is_array()) throw ParseError(root + ".layers: expected an array");
  for (std::size_t i = 0; i < jl.size(); ++i) {
    const std::string p = root + ".layers[" + std::to_string(i) + "]";
    const json& e = jl[i];
    const std::string kind = string_at(field(e, "kind", p), p + ".kind");
    std::string name = e.contains("name") ? string_at(e["name"], p + ".name") : kind + std::to_string(i);
    LayerSpec layer{name, ReLU{}};
    if (kind == "linear") {
      layer.kind = Linear{tensor_from_json(field(e, "weight", p), p + ".weight"),
                          tensor_from_json(field(e, "bias", p), p + ".bias")};
    } else if (kind == "relu") {
      layer.kind = ReLU{};
    } else if (kind == "gelu") {
      layer.kind = GELU{};
    } else if (kind == "softmax") {
      SoftMax s;
      if (e.contains("axis")) {
        if (!e["axis"].is_number_integer()) throw ParseError(p + ".axis: expected an integer");
        s.axis = e["axis"].get<int>();
      }
      layer.kind = s;
    } else if (kind == "attention") {
      AttentionHead a;
      a.wq = tensor_from_json(field(e, "wq", p), p + ".wq");
      a.wk = tensor_from_json(field(e, "wk", p), p + ".wk");
      a.wv = tensor_from_json(field(e, "wv", p), p + ".wv");
      a.wo = tensor_from_json(field(e, "wo", p), p + ".wo");
      a.scale = number_at(field(e, "scale", p), p + ".scale");
      if (e.contains("softmax_slot")) a.softmax_slot = string_at(e["softmax_slot"], p + ".softmax_slot");
      layer.kind = std::move(a);
    } else if (kind == "neuron") {
      layer.kind = NeuronSlot{string_at(field(e, "id", p), p + ".id")};
    } else {
      throw ParseError(p + ".kind: unknown layer kind '" + kind + "'");
    }
    net.layers.push_back(std::move(layer));
  }
  net.validate();
  return net;
}

inline std::string dump_json(const json& j) { return j.dump(1) + "\n"; }

inline void save_network(const NetworkSpec& net, const std::filesystem::path& path) {
  write_file_atomic(path, dump_json(network_to_json(net)));
}

inline NetworkSpec load_network(const std::filesystem::path& path) {
  return network_from_json(parse_json_text(read_file(path), path.string()), path.string());
}

/// Rows of `sample_id,feature…[,label]`. Labels are present iff the header's last column is `label`.
struct Dataset {
  std::vector<std::string> ids;
  std::vector<std::vector<double>> features;
  std::vector<int> labels;  // empty when unlabeled

  std::size_t size() const { return features.size(); }
  bool labeled() const { return !labels.empty(); }

  Dataset subset(const std::vector<std::size_t>& idx) const {
    Dataset d;
    for (auto i : idx) {
      d.ids.push_back(ids[i]);
      d.features.push_back(features[i]);
      if (labeled()) d.labels.push_back(labels[i]);
    }
    return d;
  }

  /// Seeded subsample of round(fraction·n) rows (at least one), kept in file order.
  Dataset sample_fraction(double fraction, std::uint64_t seed) const {
    if (!(fraction > 0.0 && fraction <= 1.0)) throw ValidationError("fraction must be in (0, 1]");
    std::vector<std::size_t> idx(size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    if (fraction < 1.0) {
      const auto k = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(fraction * double(size()))));
      std::mt19937_64 rng(seed);
      for (std::size_t i = 0; i < k; ++i) {
        std::size_t j = i + static_cast<std::size_t>(rng() % (size() - i));
        std::swap(idx[i], idx[j]);
      }
      idx.resize(k);
      std::sort(idx.begin(), idx.end());
    }
    return subset(idx);
  }
};

namespace detail {

inline std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(',', start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  for (auto& f : out) {
    while (!f.empty() && (f.front() == ' ' || f.front() == '\t')) f.remove_prefix(1);
    while (!f.empty() && (f.back() == ' ' || f.back() == '\t' || f.back() == '\r')) f.remove_suffix(1);
  }
  return out;
}

inline bool parse_double(std::string_view s, double& out) {
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && p == s.data() + s.size();
}

}  // namespace detail

inline Dataset parse_dataset(const std::string& text, const std::string& source = "data") {
  Dataset ds;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  bool header_seen = false, has_label = false;
  std::size_t ncols = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    auto fields = detail::split_csv(line);
    const std::string where = source + ":" + std::to_string(lineno);
    double probe;
    if (!header_seen && ds.size() == 0 && fields.size() >= 2 && !detail::parse_double(fields[1], probe)) {
      header_seen = true;
      has_label = fields.back() == "label";
      ncols = fields.size();
      continue;
    }
    if (ncols == 0) ncols = fields.size();
    if (fields.size() != ncols)
      throw ParseError(where + ": expected " + std::to_string(ncols) + " columns, got " + std::to_string(fields.size()));
    if (fields.size() < (has_label ? 3u : 2u)) throw ParseError(where + ": no feature columns");
    ds.ids.emplace_back(fields[0]);
    std::vector<double> feats;
    const std::size_t nfeat = fields.size() - 1 - (has_label ? 1 : 0);
    for (std::size_t i = 0; i < nfeat; ++i) {
      double v;
      if (!detail::parse_double(fields[1 + i], v) || !std::isfinite(v))
        throw ParseError(where + ": column " + std::to_string(i + 2) + " is not a finite number");
      feats.push_back(v);
    }
    ds.features.push_back(std::move(feats));
    if (has_label) {
      double v;
      if (!detail::parse_double(fields.back(), v) || v != std::floor(v) || v < 0)
        throw ParseError(where + ": label must be a non-negative integer");
      ds.labels.push_back(static_cast<int>(v));
    }
  }
  if (ds.size() == 0) throw ParseError(source + ": no data rows");
  return ds;
}

inline Dataset load_dataset(const std::filesystem::path& path) { return parse_dataset(read_file(path), path.string()); }

inline std::string dataset_to_csv(const Dataset& ds) {
  std::ostringstream os;
  os << std::setprecision(17) << "sample_id";
  const std::size_t nf = ds.features.empty() ? 0 : ds.features.front().size();
  for (std::size_t i = 0; i < nf; ++i) os << ",x" << i;
  if (ds.labeled()) os << ",label";
  os << '\n';
  for (std::size_t r = 0; r < ds.size(); ++r) {
    os << ds.ids[r];
    for (double v : ds.features[r]) os << ',' << v;
    if (ds.labeled()) os << ',' << ds.labels[r];
    os << '\n';
  }
  return os.str();
}

/// Shapes one feature row for the network: [input_dim] for plain MLPs, [tokens, input_dim] when
/// the network contains attention.
inline Tensor sample_tensor(const NetworkSpec& net, const std::vector<double>& features) {
  if (net.has_attention()) {
    if (features.size() % net.input_dim != 0)
      throw DimensionError("sample with " + std::to_string(features.size()) +
                           " features cannot form tokens of width " + std::to_string(net.input_dim));
    return Tensor(Shape{features.size() / net.input_dim, net.input_dim}, features);
  }
  if (features.size() != net.input_dim)
    throw DimensionError("sample has " + std::to_string(features.size()) + " features, network expects " +
                         std::to_string(net.input_dim));
  return Tensor::vector(features);
}

/// Class prediction: argmax of the output, averaging over tokens for 2-D outputs.
inline std::size_t predict_class(const Tensor& output) {
  if (output.rank() == 1) return argmax(output.data());
  std::vector<double> mean(output.last_dim(), 0.0);
  for (std::size_t r = 0; r < output.rows(); ++r)
    for (std::size_t c = 0; c < output.last_dim(); ++c) mean[c] += output.at(r, c);
  return argmax(mean);
}

/// CSV `layer,sample,index,value` of the tensors recorded at each requested slot.
inline std::string activation_dump_csv(const NetworkSpec& net, const Dataset& data, const std::set<std::string>& slots) {
  std::ostringstream os;
  os << std::setprecision(17) << "layer,sample,index,value\n";
  for (std::size_t s = 0; s < data.size(); ++s) {
    auto res = forward(net, sample_tensor(net, data.features[s]), slots);
    for (const auto& [name, t] : res.recorded)
      for (std::size_t i = 0; i < t.size(); ++i) os << name << ',' << data.ids[s] << ',' << i << ',' << t[i] << '\n';
  }
  return os.str();
}

}  // namespace spikeforge
