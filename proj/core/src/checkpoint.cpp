#include "cadgl/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <unordered_map>

#include <fmt/format.h>

#include "cadgl/error.hpp"

namespace cadgl {
namespace {

constexpr char kMagic[8] = {'C', 'A', 'D', 'G', 'L', 'C', 'K', 'P'};
constexpr const char* kMomentPrefix = "adam.m:";
constexpr const char* kVelocityPrefix = "adam.v:";

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

class Writer {
 public:
  template <typename T>
  void put(T v) {
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    bytes_.append(buf, sizeof(T));
  }
  void put_bytes(std::string_view s) { bytes_.append(s); }
  void put_tensor(const std::string& name, const Tensor& t) {
    put<std::uint32_t>(static_cast<std::uint32_t>(name.size()));
    put_bytes(name);
    put<std::uint64_t>(t.rows());
    put<std::uint64_t>(t.cols());
    for (double v : t.data()) put<double>(v);
  }
  std::string& bytes() { return bytes_; }

 private:
  std::string bytes_;
};

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}
  template <typename T>
  T get(const char* what) {
    need(sizeof(T), what);
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string get_bytes(std::size_t n, const char* what) {
    need(n, what);
    std::string s(bytes_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  std::size_t position() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n, const char* what) {
    if (bytes_.size() - pos_ < n) {
      throw CheckpointError(fmt::format("checkpoint truncated while reading {}", what));
    }
  }
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

nlohmann::json optional_metric(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

std::optional<double> read_optional(const nlohmann::json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

nlohmann::json to_json(const ModelDims& d) {
  return {{"n_drugs", d.n_drugs}, {"f_dim", d.f_dim}, {"n_types", d.n_types}};
}

}  // namespace

nlohmann::ordered_json to_json(const Metrics& m) {
  nlohmann::ordered_json j;
  j["accuracy"] = m.accuracy;
  j["auroc"] = optional_metric(m.auroc);
  j["auprc"] = optional_metric(m.auprc);
  j["f1"] = m.f1;
  j["n_pos"] = m.n_pos;
  j["n_neg"] = m.n_neg;
  return j;
}

nlohmann::ordered_json to_json(const EpochRecord& r) {
  nlohmann::ordered_json j;
  j["epoch"] = r.epoch;
  j["ce"] = r.loss.ce;
  j["kl"] = r.loss.kl;
  j["ss"] = r.loss.ss;
  j["total"] = r.loss.total;
  j["train_accuracy"] = r.train_accuracy;
  j["val_loss"] = r.val_loss;
  j["val_accuracy"] = r.val.accuracy;
  j["val_auroc"] = optional_metric(r.val.auroc);
  j["val_auprc"] = optional_metric(r.val.auprc);
  j["val_f1"] = r.val.f1;
  j["val_n_pos"] = r.val.n_pos;
  j["val_n_neg"] = r.val.n_neg;
  return j;
}

EpochRecord epoch_record_from_json(const nlohmann::json& j) {
  EpochRecord r;
  r.epoch = j.at("epoch").get<std::size_t>();
  r.loss.ce = j.at("ce").get<double>();
  r.loss.kl = j.at("kl").get<double>();
  r.loss.ss = j.at("ss").get<double>();
  r.loss.total = j.at("total").get<double>();
  r.train_accuracy = j.at("train_accuracy").get<double>();
  r.val_loss = j.at("val_loss").get<double>();
  r.val.accuracy = j.at("val_accuracy").get<double>();
  r.val.auroc = read_optional(j.at("val_auroc"));
  r.val.auprc = read_optional(j.at("val_auprc"));
  r.val.f1 = j.at("val_f1").get<double>();
  r.val.n_pos = j.at("val_n_pos").get<std::size_t>();
  r.val.n_neg = j.at("val_n_neg").get<std::size_t>();
  return r;
}

Checkpoint make_checkpoint(const CadglModel& model, const AdamState& optimizer, std::size_t epoch,
                           std::vector<EpochRecord> history, nlohmann::json metadata) {
  Checkpoint c;
  c.config = model.config();
  c.dims = model.dims();
  c.epoch = epoch;
  c.history = std::move(history);
  c.metadata = metadata.is_null() ? nlohmann::json::object() : std::move(metadata);
  for (const auto& p : model.parameters()) c.parameters.emplace_back(p.name(), p.value());
  c.optimizer = optimizer;
  return c;
}

std::filesystem::path sidecar_path(const std::filesystem::path& path) {
  return std::filesystem::path(path.string() + ".json");
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c) {
  if (c.optimizer.m.size() != c.parameters.size() || c.optimizer.v.size() != c.parameters.size()) {
    throw CheckpointError("optimizer state does not match the parameter list");
  }
  Writer w;
  w.put_bytes(std::string_view(kMagic, sizeof(kMagic)));
  w.put<std::uint32_t>(c.format_version);
  w.put<std::uint64_t>(c.epoch);
  w.put<std::uint64_t>(c.optimizer.step);
  w.put<std::uint64_t>(3 * c.parameters.size());
  for (const auto& [name, t] : c.parameters) w.put_tensor(name, t);
  for (std::size_t i = 0; i < c.parameters.size(); ++i) {
    w.put_tensor(kMomentPrefix + c.parameters[i].first, c.optimizer.m[i]);
  }
  for (std::size_t i = 0; i < c.parameters.size(); ++i) {
    w.put_tensor(kVelocityPrefix + c.parameters[i].first, c.optimizer.v[i]);
  }
  w.put<std::uint64_t>(fnv1a(w.bytes()));

  nlohmann::ordered_json side;
  side["format_version"] = c.format_version;
  side["config"] = to_json(c.config);
  side["dims"] = to_json(c.dims);
  side["epoch"] = c.epoch;
  side["history"] = nlohmann::ordered_json::array();
  for (const auto& r : c.history) side["history"].push_back(to_json(r));
  side["metadata"] = c.metadata;

  std::ofstream out(path, std::ios::binary);
  out.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
  std::ofstream side_out(sidecar_path(path));
  side_out << side.dump(2) << '\n';
  if (!out || !side_out) throw CheckpointError("failed to write checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  Reader r(bytes);
  if (r.get_bytes(sizeof(kMagic), "magic") != std::string_view(kMagic, sizeof(kMagic))) {
    throw CheckpointError(path.string() + ": bad magic bytes, not a checkpoint");
  }
  Checkpoint c;
  c.format_version = r.get<std::uint32_t>("format version");
  if (c.format_version != kCheckpointVersion) {
    throw CheckpointError(fmt::format("{}: format version {} is not supported (expected {})",
                                      path.string(), c.format_version, kCheckpointVersion));
  }
  if (bytes.size() < sizeof(std::uint64_t)) throw CheckpointError("checkpoint truncated");
  const std::size_t body = bytes.size() - sizeof(std::uint64_t);
  std::uint64_t stored_hash = 0;
  std::memcpy(&stored_hash, bytes.data() + body, sizeof(stored_hash));

  c.epoch = r.get<std::uint64_t>("epoch");
  c.optimizer.step = r.get<std::uint64_t>("optimizer step");
  const auto count = r.get<std::uint64_t>("record count");
  if (count % 3 != 0) throw CheckpointError("record count is not a multiple of 3");
  std::vector<std::pair<std::string, Tensor>> records;
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto len = r.get<std::uint32_t>("name length");
    std::string name = r.get_bytes(len, "parameter name");
    const auto rows = r.get<std::uint64_t>("rows");
    const auto cols = r.get<std::uint64_t>("cols");
    if (rows != 0 && cols > r.remaining() / sizeof(double) / rows) {
      throw CheckpointError(fmt::format("checkpoint truncated in tensor '{}'", name));
    }
    std::vector<double> data(rows * cols);
    for (auto& v : data) v = r.get<double>("tensor payload");
    records.emplace_back(std::move(name), Tensor(rows, cols, std::move(data)));
  }
  if (r.position() != body) {
    throw CheckpointError(fmt::format("{}: {} unexpected trailing bytes", path.string(),
                                      static_cast<long long>(bytes.size()) -
                                          static_cast<long long>(r.position())));
  }
  if (fnv1a(std::string_view(bytes).substr(0, body)) != stored_hash) {
    throw CheckpointError(path.string() + ": content hash mismatch (corrupted file)");
  }

  const std::size_t n = count / 3;
  for (std::size_t i = 0; i < n; ++i) {
    const std::string& name = records[i].first;
    if (records[n + i].first != kMomentPrefix + name ||
        records[2 * n + i].first != kVelocityPrefix + name) {
      throw CheckpointError("optimizer records out of order for parameter " + name);
    }
    c.parameters.push_back(std::move(records[i]));
    c.optimizer.m.push_back(std::move(records[n + i].second));
    c.optimizer.v.push_back(std::move(records[2 * n + i].second));
  }

  std::ifstream side_in(sidecar_path(path));
  if (!side_in) throw CheckpointError("missing checkpoint sidecar " + sidecar_path(path).string());
  try {
    const nlohmann::json side = nlohmann::json::parse(side_in);
    if (side.at("format_version").get<std::uint32_t>() != c.format_version) {
      throw CheckpointError("sidecar format_version does not match the checkpoint");
    }
    if (side.at("epoch").get<std::size_t>() != c.epoch) {
      throw CheckpointError("sidecar epoch does not match the checkpoint");
    }
    c.config = train_config_from_json(side.at("config"));
    const auto& d = side.at("dims");
    c.dims = {d.at("n_drugs").get<std::size_t>(), d.at("f_dim").get<std::size_t>(),
              d.at("n_types").get<std::size_t>()};
    for (const auto& h : side.at("history")) c.history.push_back(epoch_record_from_json(h));
    c.metadata = side.at("metadata");
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(fmt::format("malformed checkpoint sidecar: {}", e.what()));
  } catch (const ConfigError& e) {
    throw CheckpointError(fmt::format("checkpoint sidecar config: {}", e.what()));
  }
  return c;
}

void restore_parameters(CadglModel& model, const Checkpoint& c) {
  std::unordered_map<std::string, const Tensor*> by_name;
  for (const auto& [name, t] : c.parameters) by_name.emplace(name, &t);
  for (const auto& p : model.parameters()) {
    auto it = by_name.find(p.name());
    if (it == by_name.end()) {
      throw CheckpointError(fmt::format("checkpoint lacks parameter '{}' {}", p.name(),
                                        p.shape().str()));
    }
    if (it->second->shape() != p.shape()) {
      throw CheckpointError(fmt::format("shape mismatch for parameter '{}': checkpoint {} vs model {}",
                                        p.name(), it->second->shape().str(), p.shape().str()));
    }
  }
  for (const auto& [name, t] : c.parameters) {
    if (!model.parameters().contains(name)) {
      throw CheckpointError(fmt::format("unknown parameter '{}' in checkpoint", name));
    }
  }
  for (auto& p : model.parameters()) p.mutable_value() = *by_name.at(p.name());
}

CadglModel model_from_checkpoint(const Checkpoint& c) {
  CadglModel model(c.config, c.dims);
  restore_parameters(model, c);
  return model;
}

}  // namespace cadgl
