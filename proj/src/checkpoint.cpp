// Copyright 2026 The leafnet Authors
// SPDX-License-Identifier: Apache-2.0

#include "leafnet/checkpoint.hpp"

#include <json.hpp>

#include "leafnet/binio.hpp"

namespace leafnet {

using nlohmann::json;

namespace {

constexpr char kMagic[4] = {'L', 'F', 'C', 'K'};

json spec_to_json(const ModelSpec& spec) {
  json blocks = json::array();
  for (const BlockConfig& b : spec.blocks) {
    blocks.push_back({{"in", b.in_channels},
                      {"out", b.out_channels},
                      {"expansion", b.expansion_ratio},
                      {"se", b.se_ratio},
                      {"survival", b.survival_prob},
                      {"stride", b.stride}});
  }
  return {{"stem_channels", spec.stem_channels},
          {"blocks", blocks},
          {"dropout_prob", spec.dropout_prob},
          {"num_classes", spec.num_classes},
          {"input_resolution", spec.input_resolution}};
}

ModelSpec spec_from_json(const json& j) {
  ModelSpec spec;
  spec.stem_channels = j.at("stem_channels").get<int>();
  spec.dropout_prob = j.at("dropout_prob").get<double>();
  spec.num_classes = j.at("num_classes").get<int>();
  spec.input_resolution = j.at("input_resolution").get<int>();
  for (const json& b : j.at("blocks")) {
    BlockConfig cfg;
    cfg.in_channels = b.at("in").get<int>();
    cfg.out_channels = b.at("out").get<int>();
    cfg.expansion_ratio = b.at("expansion").get<double>();
    cfg.se_ratio = b.at("se").get<double>();
    cfg.survival_prob = b.at("survival").get<double>();
    cfg.stride = b.at("stride").get<int>();
    spec.blocks.push_back(cfg);
  }
  return spec;
}

json train_cfg_to_json(const TrainConfig& cfg) {
  return {{"batch_size", cfg.batch_size},
          {"optimizer", cfg.optimizer == OptimizerKind::Adam ? "adam" : "sgd"},
          {"lr0", cfg.lr0},
          {"lr_decay", cfg.lr_decay},
          {"epochs", cfg.epochs},
          {"momentum", cfg.momentum},
          {"beta1", cfg.beta1},
          {"beta2", cfg.beta2},
          {"eps", cfg.eps},
          {"seed", cfg.seed}};
}

TrainConfig train_cfg_from_json(const json& j) {
  TrainConfig cfg;
  cfg.batch_size = j.at("batch_size").get<int>();
  cfg.optimizer = j.at("optimizer").get<std::string>() == "sgd" ? OptimizerKind::Sgd
                                                                : OptimizerKind::Adam;
  cfg.lr0 = j.at("lr0").get<double>();
  cfg.lr_decay = j.at("lr_decay").get<double>();
  cfg.epochs = j.at("epochs").get<int>();
  cfg.momentum = j.at("momentum").get<double>();
  cfg.beta1 = j.at("beta1").get<double>();
  cfg.beta2 = j.at("beta2").get<double>();
  cfg.eps = j.at("eps").get<double>();
  cfg.seed = j.at("seed").get<std::uint64_t>();
  return cfg;
}

}  // namespace

Checkpoint make_checkpoint(const Model& model, const TrainConfig& cfg, const Rng& rng) {
  Checkpoint ckpt;
  ckpt.spec = model.spec;
  for (const Tensor& t : model.parameters()) ckpt.weights.push_back(t.data());
  ckpt.train_cfg = cfg;
  ckpt.rng_state = rng.state_string();
  return ckpt;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  const std::vector<std::pair<std::string, Shape>> manifest = parameter_shapes(ckpt.spec);
  if (manifest.size() != ckpt.weights.size()) {
    throw ShapeMismatch("save_checkpoint: weights do not match the spec's parameter manifest");
  }
  json weights_json = json::array();
  for (std::size_t i = 0; i < manifest.size(); ++i) {
    if (static_cast<std::int64_t>(ckpt.weights[i].size()) != shape_numel(manifest[i].second)) {
      throw ShapeMismatch("save_checkpoint: weight '" + manifest[i].first + "' has wrong size");
    }
    weights_json.push_back({{"name", manifest[i].first}, {"shape", manifest[i].second}});
  }

  json header = {{"spec", spec_to_json(ckpt.spec)},
                 {"train_cfg", train_cfg_to_json(ckpt.train_cfg)},
                 {"rng_state", ckpt.rng_state},
                 {"weights", weights_json}};
  if (ckpt.optimizer) {
    header["optimizer"] = {
        {"kind", ckpt.optimizer->kind == OptimizerKind::Adam ? "adam" : "sgd"},
        {"step_count", ckpt.optimizer->step_count}};
  } else {
    header["optimizer"] = nullptr;
  }
  const std::string header_str = header.dump();

  std::string out;
  out.append(kMagic, 4);
  append_u32le(out, static_cast<std::uint32_t>(ckpt.format_version));
  append_u64le(out, header_str.size());
  out += header_str;
  for (const std::vector<double>& w : ckpt.weights) {
    for (double v : w) append_f64le(out, v);
  }
  if (ckpt.optimizer) {
    for (const std::vector<double>& b : ckpt.optimizer->buf_a) {
      for (double v : b) append_f64le(out, v);
    }
    for (const std::vector<double>& b : ckpt.optimizer->buf_b) {
      for (double v : b) append_f64le(out, v);
    }
  }
  append_u32le(out, crc32(out.data(), out.size()));
  write_file_bytes(path, out);
}

Checkpoint load_checkpoint(const std::string& path) {
  const std::string bytes = read_file_bytes(path);
  if (bytes.size() < 20) throw Truncated("checkpoint too short: " + path);

  // CRC covers everything before the trailing 4 bytes.
  const std::uint32_t expect = crc32(bytes.data(), bytes.size() - 4);
  std::uint32_t actual = 0;
  for (int i = 0; i < 4; ++i) {
    actual |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[bytes.size() - 4 + i]))
              << (8 * i);
  }
  if (expect != actual) throw ChecksumMismatch("checkpoint checksum mismatch: " + path);

  BinReader reader(bytes);
  const std::string magic = reader.read_bytes(4);
  if (magic != std::string(kMagic, 4)) {
    throw VersionUnsupported("not a leafnet checkpoint: " + path);
  }
  const std::uint32_t version = reader.read_u32le();
  if (version != static_cast<std::uint32_t>(kCheckpointVersion)) {
    throw VersionUnsupported("checkpoint version " + std::to_string(version) +
                             " unsupported (want " + std::to_string(kCheckpointVersion) + ")");
  }
  const std::uint64_t header_len = reader.read_u64le();
  json header;
  try {
    header = json::parse(reader.read_bytes(header_len));
  } catch (const json::exception& e) {
    throw Truncated("checkpoint header unreadable: " + std::string(e.what()));
  }

  Checkpoint ckpt;
  ckpt.format_version = static_cast<int>(version);
  try {
    ckpt.spec = spec_from_json(header.at("spec"));
    ckpt.train_cfg = train_cfg_from_json(header.at("train_cfg"));
    ckpt.rng_state = header.at("rng_state").get<std::string>();
  } catch (const json::exception& e) {
    throw Truncated("checkpoint header missing fields: " + std::string(e.what()));
  }

  const std::vector<std::pair<std::string, Shape>> manifest = parameter_shapes(ckpt.spec);
  const json& weights_json = header.at("weights");
  if (weights_json.size() != manifest.size()) {
    throw Truncated("checkpoint weight manifest does not match the stored spec");
  }
  for (std::size_t i = 0; i < manifest.size(); ++i) {
    if (weights_json[i].at("name").get<std::string>() != manifest[i].first ||
        weights_json[i].at("shape").get<Shape>() != manifest[i].second) {
      throw Truncated("checkpoint weight manifest entry " + std::to_string(i) +
                      " does not match the stored spec");
    }
  }
  for (const auto& [name, shape] : manifest) {
    const std::int64_t count = shape_numel(shape);
    std::vector<double> values(static_cast<std::size_t>(count));
    for (std::int64_t i = 0; i < count; ++i) values[static_cast<std::size_t>(i)] = reader.read_f64le();
    ckpt.weights.push_back(std::move(values));
  }

  if (!header.at("optimizer").is_null()) {
    OptimizerSnapshot opt;
    opt.kind = header["optimizer"].at("kind").get<std::string>() == "sgd" ? OptimizerKind::Sgd
                                                                          : OptimizerKind::Adam;
    opt.step_count = header["optimizer"].at("step_count").get<std::int64_t>();
    const int extra = opt.kind == OptimizerKind::Adam ? 2 : 1;
    for (int pass = 0; pass < extra; ++pass) {
      std::vector<std::vector<double>>& target = pass == 0 ? opt.buf_a : opt.buf_b;
      for (const auto& [name, shape] : manifest) {
        const std::int64_t count = shape_numel(shape);
        std::vector<double> values(static_cast<std::size_t>(count));
        for (std::int64_t i = 0; i < count; ++i) {
          values[static_cast<std::size_t>(i)] = reader.read_f64le();
        }
        target.push_back(std::move(values));
      }
    }
    ckpt.optimizer = std::move(opt);
  }

  if (reader.remaining() != 4) throw Truncated("checkpoint has trailing bytes: " + path);
  return ckpt;
}

Model model_from_checkpoint(const Checkpoint& ckpt) {
  Rng dummy(0);
  Model model = build_model(ckpt.spec, dummy);
  restore_weights(model, ckpt.weights);
  return model;
}

}  // namespace leafnet
