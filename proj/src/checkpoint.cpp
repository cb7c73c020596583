// Checkpoint layout (all integers little-endian):
//
//   offset 0   8 bytes   magic "CRDQNCKP"
//   offset 8   u32       format version (1)
//   offset 12  u32       header length H in bytes
//   offset 16  H bytes   UTF-8 JSON header (see docs/checkpoint-format.md)
//   16 + H     N * 4     float32 parameters in Mlp::flatten() order
//   end - 8    u64       FNV-1a hash of the parameter bytes
#include <bit>
#include <cstring>
#include <fstream>

#include "croprow/dqn.hpp"
#include "json.hpp"

namespace croprow::dqn {
namespace {

constexpr char kMagic[8] = {'C', 'R', 'D', 'Q', 'N', 'C', 'K', 'P'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

std::uint64_t fnv1a(const char* data, std::size_t n) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= static_cast<unsigned char>(data[i]);
    h *= 0x100000001b3ULL;
  }
  return h;
}

template <typename T>
void write_pod(std::ostream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw std::runtime_error("checkpoint truncated");
  return value;
}

nlohmann::json config_to_json(const TrainConfig& c) {
  return {{"rollout_steps", c.rollout_steps},
          {"gamma", c.gamma},
          {"learning_rate", c.learning_rate},
          {"batch_size", c.batch_size},
          {"buffer_capacity", c.buffer_capacity},
          {"target_sync_interval", c.target_sync_interval},
          {"epsilon_start", c.epsilon_start},
          {"epsilon_end", c.epsilon_end},
          {"epsilon_decay_fraction", c.epsilon_decay_fraction},
          {"learning_starts", c.learning_starts},
          {"train_frequency", c.train_frequency},
          {"max_grad_norm", c.max_grad_norm},
          {"hidden_sizes", c.hidden_sizes},
          {"seed", c.seed}};
}

TrainConfig config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.rollout_steps = j.at("rollout_steps").get<int>();
  c.gamma = j.at("gamma").get<double>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.batch_size = j.at("batch_size").get<int>();
  c.buffer_capacity = j.at("buffer_capacity").get<int>();
  c.target_sync_interval = j.at("target_sync_interval").get<int>();
  c.epsilon_start = j.at("epsilon_start").get<double>();
  c.epsilon_end = j.at("epsilon_end").get<double>();
  c.epsilon_decay_fraction = j.at("epsilon_decay_fraction").get<double>();
  c.learning_starts = j.at("learning_starts").get<int>();
  c.train_frequency = j.at("train_frequency").get<int>();
  c.max_grad_norm = j.at("max_grad_norm").get<double>();
  c.hidden_sizes = j.at("hidden_sizes").get<std::vector<int>>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  const auto params = ckpt.net.mlp.flatten();
  const nlohmann::json header = {
      {"format", "croprow-dqn"},
      {"version", kVersion},
      {"layer_sizes", ckpt.net.mlp.sizes()},
      {"activation", "relu"},
      {"dtype", "float32-le"},
      {"max_rows", ckpt.net.max_rows},
      {"parameter_count", params.size()},
      {"train_config", config_to_json(ckpt.config)},
      {"curriculum", {{"stage_rows", ckpt.stage_rows},
                      {"completed_stage_rows", ckpt.completed_stage_rows}}},
      {"seed", ckpt.seed}};
  const std::string text = header.dump();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path);
  out.write(kMagic, sizeof(kMagic));
  write_pod(out, kVersion);
  write_pod(out, static_cast<std::uint32_t>(text.size()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  const auto* bytes = reinterpret_cast<const char*>(params.data());
  const std::size_t n_bytes = params.size() * sizeof(float);
  out.write(bytes, static_cast<std::streamsize>(n_bytes));
  write_pod(out, fnv1a(bytes, n_bytes));
  if (!out) throw std::runtime_error("failed writing checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw std::runtime_error("not a croprow DQN checkpoint: " + path);
  }
  const auto version = read_pod<std::uint32_t>(in);
  if (version != kVersion) {
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
  }
  const auto header_len = read_pod<std::uint32_t>(in);
  std::string text(header_len, '\0');
  in.read(text.data(), header_len);
  if (!in) throw std::runtime_error("checkpoint truncated in header");
  const auto header = nlohmann::json::parse(text);

  Checkpoint ckpt;
  const auto sizes = header.at("layer_sizes").get<std::vector<int>>();
  ckpt.net.max_rows = header.at("max_rows").get<int>();
  ckpt.config = config_from_json(header.at("train_config"));
  ckpt.stage_rows = header.at("curriculum").at("stage_rows").get<std::vector<int>>();
  ckpt.completed_stage_rows = header.at("curriculum").at("completed_stage_rows").get<int>();
  ckpt.seed = header.at("seed").get<std::uint64_t>();
  if (sizes.size() < 2 || sizes.front() != 5 || sizes.back() != ActionSpace{ckpt.net.max_rows}.size()) {
    throw std::runtime_error("checkpoint layer sizes do not match its action space");
  }

  Rng unused(0);
  ckpt.net.mlp = nn::Mlp<float>(sizes, unused);
  std::vector<float> params(ckpt.net.mlp.parameter_count());
  if (header.at("parameter_count").get<std::size_t>() != params.size()) {
    throw std::runtime_error("checkpoint parameter count mismatch");
  }
  auto* bytes = reinterpret_cast<char*>(params.data());
  const std::size_t n_bytes = params.size() * sizeof(float);
  in.read(bytes, static_cast<std::streamsize>(n_bytes));
  if (!in) throw std::runtime_error("checkpoint truncated in parameters");
  if (read_pod<std::uint64_t>(in) != fnv1a(bytes, n_bytes)) {
    throw std::runtime_error("checkpoint parameter checksum mismatch");
  }
  ckpt.net.mlp.assign(params);
  return ckpt;
}

}  // namespace croprow::dqn
