#include "akorn/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include <json.hpp>

namespace akorn {

namespace {

constexpr char kMagic[4] = {'A', 'K', 'R', 'N'};
constexpr uint32_t kVersion = 1;

void put_u32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::string& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_f64(std::string& out, double d) {
  uint64_t v = 0;
  std::memcpy(&v, &d, 8);
  put_u64(out, v);
}

struct Reader {
  std::string bytes;
  size_t pos = 0;
  std::string path;

  void need(size_t n, const char* what) {
    detail::require(pos + n <= bytes.size(),
                    "checkpoint " + path + ": truncated while reading " + what);
  }
  uint32_t u32(const char* what) {
    need(4, what);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<uint32_t>(static_cast<uint8_t>(bytes[pos++])) << (8 * i);
    return v;
  }
  uint64_t u64(const char* what) {
    need(8, what);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= static_cast<uint64_t>(static_cast<uint8_t>(bytes[pos++])) << (8 * i);
    return v;
  }
  double f64(const char* what) {
    uint64_t v = u64(what);
    double d = 0;
    std::memcpy(&d, &v, 8);
    return d;
  }
  std::string str(size_t n, const char* what) {
    need(n, what);
    std::string s = bytes.substr(pos, n);
    pos += n;
    return s;
  }
};

}  // namespace

void save_checkpoint(const Checkpoint& ck, const std::string& path) {
  std::string out;
  out.append(kMagic, 4);
  put_u32(out, ck.version);
  put_u64(out, ck.metadata.size());
  out += ck.metadata;
  put_u64(out, ck.tensors.size());
  for (const auto& [name, t] : ck.tensors) {
    put_u32(out, static_cast<uint32_t>(name.size()));
    out += name;
    put_u32(out, static_cast<uint32_t>(t.shape().size()));
    for (int64_t d : t.shape()) put_u64(out, static_cast<uint64_t>(d));
    for (int64_t i = 0; i < t.numel(); ++i) put_f64(out, t[i]);
  }

  std::ofstream f(path, std::ios::binary);
  detail::require(f.good(), "cannot write checkpoint " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  detail::require(f.good(), "short write to checkpoint " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  detail::require(f.good(), "cannot open checkpoint " + path);
  std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());

  Reader r{std::move(bytes), 0, path};
  std::string magic = r.str(4, "magic");
  detail::require(std::memcmp(magic.data(), kMagic, 4) == 0,
                  "checkpoint " + path + ": not a checkpoint file");
  Checkpoint ck;
  ck.version = r.u32("version");
  detail::require(ck.version == kVersion,
                  "checkpoint " + path + ": unsupported version " +
                      std::to_string(ck.version) + ", this build reads version " +
                      std::to_string(kVersion));
  uint64_t meta_len = r.u64("metadata length");
  ck.metadata = r.str(meta_len, "metadata");
  uint64_t count = r.u64("tensor count");
  ck.tensors.reserve(count);
  for (uint64_t i = 0; i < count; ++i) {
    uint32_t name_len = r.u32("tensor name length");
    std::string name = r.str(name_len, "tensor name");
    uint32_t rank = r.u32("tensor rank");
    Shape shape;
    int64_t numel = 1;
    for (uint32_t d = 0; d < rank; ++d) {
      auto dim = static_cast<int64_t>(r.u64("tensor dims"));
      detail::require(dim >= 0, "checkpoint " + path + ": negative dimension");
      shape.push_back(dim);
      numel *= dim;
    }
    Tensor t(shape);
    for (int64_t e = 0; e < numel; ++e) t[e] = r.f64("tensor payload");
    ck.tensors.emplace_back(std::move(name), std::move(t));
  }
  detail::require(r.pos == r.bytes.size(),
                  "checkpoint " + path + ": trailing bytes after the last tensor");
  return ck;
}

namespace {

const char* umode_name(Readout::UMode m) {
  return m == Readout::UMode::scalar_block ? "scalar_block" : "full";
}

const char* init_name(InitMode m) {
  switch (m) {
    case InitMode::random_sphere: return "random_sphere";
    case InitMode::from_stimulus: return "from_stimulus";
    case InitMode::learned: return "learned";
    default: return "mixed";
  }
}

Readout::UMode umode_from(const std::string& s) {
  if (s == "scalar_block") return Readout::UMode::scalar_block;
  if (s == "full") return Readout::UMode::full;
  detail::fail("unknown readout mode '" + s + "'");
}

InitMode init_from(const std::string& s) {
  if (s == "random_sphere") return InitMode::random_sphere;
  if (s == "from_stimulus") return InitMode::from_stimulus;
  if (s == "learned") return InitMode::learned;
  if (s == "mixed") return InitMode::mixed;
  detail::fail("unknown oscillator init '" + s + "'");
}

}  // namespace

std::string network_config_json(const Network::Config& cfg) {
  nlohmann::json j;
  j["channels"] = cfg.channels;
  j["n"] = cfg.n;
  j["tokens"] = cfg.tokens;
  j["steps"] = cfg.steps;
  j["blocks"] = cfg.blocks;
  j["heads"] = cfg.heads;
  j["classes"] = cfg.classes;
  j["vocab"] = cfg.vocab;
  j["norm_groups"] = cfg.norm_groups;
  j["per_channel_omega"] = cfg.per_channel_omega;
  j["umode"] = umode_name(cfg.umode);
  j["init"] = init_name(cfg.init);
  j["gamma0"] = cfg.gamma0;
  return j.dump();
}

Network::Config network_config_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  Network::Config cfg;
  cfg.channels = j.at("channels").get<int64_t>();
  cfg.n = j.at("n").get<int64_t>();
  cfg.tokens = j.at("tokens").get<int64_t>();
  cfg.steps = j.at("steps").get<int64_t>();
  cfg.blocks = j.at("blocks").get<int64_t>();
  cfg.heads = j.at("heads").get<int64_t>();
  cfg.classes = j.at("classes").get<int64_t>();
  cfg.vocab = j.at("vocab").get<int64_t>();
  cfg.norm_groups = j.at("norm_groups").get<int64_t>();
  cfg.per_channel_omega = j.at("per_channel_omega").get<bool>();
  cfg.umode = umode_from(j.at("umode").get<std::string>());
  cfg.init = init_from(j.at("init").get<std::string>());
  cfg.gamma0 = j.at("gamma0").get<double>();
  return cfg;
}

void save_sudoku_model(SudokuModel& model, const std::string& path, uint64_t seed,
                       int64_t step) {
  nlohmann::json meta;
  meta["kind"] = "sudoku";
  meta["config"] = nlohmann::json::parse(network_config_json(model.net.cfg));
  meta["seed"] = seed;
  meta["step"] = step;

  Checkpoint ck;
  ck.metadata = meta.dump();
  for (Param* p : model.net.params()) ck.tensors.emplace_back(p->name, p->value);
  save_checkpoint(ck, path);
}

LoadedSudoku load_sudoku_model(const std::string& path) {
  Checkpoint ck = load_checkpoint(path);
  nlohmann::json meta = nlohmann::json::parse(ck.metadata);
  detail::require(meta.value("kind", "") == "sudoku",
                  "checkpoint " + path + ": not a board-task model");
  Network::Config cfg = network_config_from_json(meta.at("config").dump());

  Rng rng(meta.value("seed", uint64_t{0}));
  LoadedSudoku out{SudokuModel(cfg, rng), meta.value("seed", uint64_t{0}),
                   meta.value("step", int64_t{0})};

  std::vector<Param*> params = out.model.net.params();
  detail::require(params.size() == ck.tensors.size(),
                  "checkpoint " + path + ": holds " + std::to_string(ck.tensors.size()) +
                      " tensors, the architecture needs " + std::to_string(params.size()));
  for (size_t i = 0; i < params.size(); ++i) {
    auto& [name, value] = ck.tensors[i];
    detail::require(name == params[i]->name, "checkpoint " + path + ": tensor " +
                                                 std::to_string(i) + " is '" + name +
                                                 "', expected '" + params[i]->name + "'");
    detail::require(value.shape() == params[i]->value.shape(),
                    "checkpoint " + path + ": shape mismatch for '" + name + "'");
    params[i]->value = value;
  }
  return out;
}

}  // namespace akorn
