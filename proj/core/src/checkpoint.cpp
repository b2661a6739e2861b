#include "pdfscan/checkpoint.hpp"

#include <cstdint>

#include "container.hpp"
#include "pdfscan/errors.hpp"

namespace pdfscan::models {

namespace {

constexpr std::string_view kMagic = "PDFSCK01";

using container::json;

json config_to_json(const ModelConfig& cfg) {
  json convs = json::array();
  for (const auto& c : cfg.convs) {
    convs.push_back({{"window", c.window},
                     {"stride", c.stride},
                     {"kernels", c.kernels},
                     {"batch_norm", c.batch_norm}});
  }
  return {{"arch", std::string(1, arch_letter(cfg.arch))},
          {"input_length", cfg.input_length},
          {"embed_dim", cfg.embed_dim},
          {"convs", convs},
          {"hidden", cfg.hidden},
          {"hidden_batch_norm", cfg.hidden_batch_norm},
          {"dropout_p", cfg.dropout_p}};
}

ModelConfig config_from_json(const json& j) {
  ModelConfig cfg;
  const auto arch = j.at("arch").get<std::string>();
  if (arch.size() != 1) {
    throw UnknownArchError("unknown architecture id: '" + arch + "'");
  }
  cfg.arch = arch_from_letter(arch[0]);
  cfg.input_length = j.at("input_length").get<int>();
  cfg.embed_dim = j.at("embed_dim").get<int>();
  for (const auto& c : j.at("convs")) {
    cfg.convs.push_back({c.at("window").get<int>(), c.at("stride").get<int>(),
                         c.at("kernels").get<int>(),
                         c.at("batch_norm").get<bool>()});
  }
  cfg.hidden = j.at("hidden").get<int>();
  cfg.hidden_batch_norm = j.at("hidden_batch_norm").get<bool>();
  cfg.dropout_p = j.at("dropout_p").get<double>();
  return cfg;
}

json meta_to_json(const TrainMeta& meta) {
  return {{"seed", meta.seed},
          {"epochs_run", meta.epochs_run},
          {"selected_epoch", meta.selected_epoch},
          {"val_detection_at_1pct", meta.val_detection_at_1pct},
          {"val_detection_by_epoch", meta.val_detection_by_epoch}};
}

TrainMeta meta_from_json(const json& j) {
  TrainMeta meta;
  meta.seed = j.at("seed").get<std::uint64_t>();
  meta.epochs_run = j.at("epochs_run").get<int>();
  meta.selected_epoch = j.at("selected_epoch").get<int>();
  meta.val_detection_at_1pct = j.at("val_detection_at_1pct").get<double>();
  meta.val_detection_by_epoch =
      j.at("val_detection_by_epoch").get<std::vector<double>>();
  return meta;
}

std::size_t shape_count(const std::vector<int>& shape) {
  std::size_t n = 1;
  for (int d : shape) {
    if (d < 1) throw CorruptCheckpointError("non-positive block dimension");
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

}  // namespace

void save_checkpoint(const ModelCheckpoint& ckpt, const std::string& path) {
  json table = json::array();
  std::vector<std::uint8_t> payload;
  for (const auto& b : ckpt.blocks) {
    table.push_back({{"name", b.name},
                     {"shape", b.shape},
                     {"trainable", b.trainable},
                     {"dtype", "f32"},
                     {"offset", payload.size()},
                     {"count", b.values.size()}});
    for (float v : b.values) container::append_f32(payload, v);
  }
  const json header = {{"format", "pdfscan model checkpoint"},
                       {"version", 1},
                       {"config", config_to_json(ckpt.config)},
                       {"meta", meta_to_json(ckpt.meta)},
                       {"blocks", table}};
  container::write_container(path, kMagic, header, payload);
}

ModelCheckpoint load_checkpoint(const std::string& path) {
  const auto blob = container::read_container(path, kMagic);
  try {
    const json& header = blob.header;
    if (header.at("version").get<int>() != 1) {
      throw CorruptCheckpointError("unsupported checkpoint version in " + path);
    }
    ModelCheckpoint ckpt;
    ckpt.config = config_from_json(header.at("config"));
    ckpt.meta = meta_from_json(header.at("meta"));
    if (ckpt.meta.selected_epoch > ckpt.meta.epochs_run ||
        ckpt.meta.selected_epoch < 0) {
      throw CorruptCheckpointError("selected_epoch out of range in " + path);
    }
    container::PayloadReader reader(blob.payload);
    for (const auto& entry : header.at("blocks")) {
      ParamBlock b;
      b.name = entry.at("name").get<std::string>();
      b.shape = entry.at("shape").get<std::vector<int>>();
      b.trainable = entry.at("trainable").get<bool>();
      if (entry.at("dtype").get<std::string>() != "f32") {
        throw CorruptCheckpointError("unexpected dtype for block " + b.name +
                                     " in " + path);
      }
      const auto count = entry.at("count").get<std::size_t>();
      if (count != shape_count(b.shape)) {
        throw CorruptCheckpointError("block count does not match shape for " +
                                     b.name + " in " + path);
      }
      reader.seek(entry.at("offset").get<std::size_t>());
      b.values.resize(count);
      for (auto& v : b.values) v = reader.f32();
      ckpt.blocks.push_back(std::move(b));
    }
    return ckpt;
  } catch (const json::exception& e) {
    throw CorruptCheckpointError("malformed checkpoint header in " + path +
                                 ": " + e.what());
  }
}

}  // namespace pdfscan::models
