// Copyright 2026 The leafnet Authors
// SPDX-License-Identifier: Apache-2.0

#include "leafnet/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace leafnet {

namespace {

std::string trim(const std::string& s) {
  const std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, sep)) out.push_back(trim(item));
  return out;
}

double parse_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double d = 0.0;
  try {
    d = std::stod(v, &used);
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': bad number '" + v + "'");
  }
  if (used != v.size()) throw ConfigError("config key '" + key + "': bad number '" + v + "'");
  return d;
}

long long parse_int(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  long long i = 0;
  try {
    i = std::stoll(v, &used);
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': bad integer '" + v + "'");
  }
  if (used != v.size()) throw ConfigError("config key '" + key + "': bad integer '" + v + "'");
  return i;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "on" || v == "1") return true;
  if (v == "false" || v == "off" || v == "0") return false;
  throw ConfigError("config key '" + key + "': bad boolean '" + v + "'");
}

std::array<double, 3> parse_triple(const std::string& key, const std::string& v) {
  const std::vector<std::string> parts = split(v, ',');
  if (parts.size() != 3) throw ConfigError("config key '" + key + "': need 3 comma-separated values");
  return {parse_double(key, parts[0]), parse_double(key, parts[1]), parse_double(key, parts[2])};
}

/// Stage syntax: "out:repeat:stride:expansion", comma separated.
struct StageDef {
  int out = 0;
  int repeat = 1;
  int stride = 1;
  double expansion = 4.0;
};

std::vector<StageDef> parse_stages(const std::string& v) {
  std::vector<StageDef> stages;
  for (const std::string& part : split(v, ',')) {
    if (part.empty()) continue;
    const std::vector<std::string> f = split(part, ':');
    if (f.size() != 4) {
      throw ConfigError("model.stages entry '" + part + "': want out:repeat:stride:expansion");
    }
    StageDef s;
    s.out = static_cast<int>(parse_int("model.stages", f[0]));
    s.repeat = static_cast<int>(parse_int("model.stages", f[1]));
    s.stride = static_cast<int>(parse_int("model.stages", f[2]));
    s.expansion = parse_double("model.stages", f[3]);
    stages.push_back(s);
  }
  return stages;
}

std::vector<ScaledDims> parse_growth(const std::string& v) {
  std::vector<ScaledDims> out;
  for (const std::string& rule : split(v, ';')) {
    if (rule.empty()) continue;
    const std::vector<std::string> f = split(rule, ',');
    if (f.size() != 3) {
      throw ConfigError("selftrain.growth rule '" + rule + "': want d,w,r");
    }
    out.push_back(ScaledDims{parse_double("selftrain.growth", f[0]),
                             parse_double("selftrain.growth", f[1]),
                             parse_double("selftrain.growth", f[2])});
  }
  return out;
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

RunConfig parse_run_config_text(const std::string& text, const std::string& origin) {
  RunConfig cfg;
  // Model defaults: small scaled net for 32x32 desk-scale runs.
  std::string stages_value = "16:1:2:4, 16:1:1:4";
  double se_ratio = 0.25;
  double survival_prob = 0.8;
  std::vector<StageDef> stages = parse_stages(stages_value);

  std::istringstream is(text);
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const std::string stripped = trim(line.substr(0, line.find('#')));
    if (stripped.empty()) continue;
    const std::size_t eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));

    if (key == "seed") {
      cfg.seed = static_cast<std::uint64_t>(parse_int(key, value));
    } else if (key == "data.labels_csv") {
      cfg.labels_csv = value;
    } else if (key == "data.images_dir") {
      cfg.images_dir = value;
    } else if (key == "data.unlabeled_dir") {
      cfg.unlabeled_dir = value;
    } else if (key == "data.train_fraction") {
      cfg.train_fraction = parse_double(key, value);
    } else if (key == "model.stem_channels") {
      cfg.model.stem_channels = static_cast<int>(parse_int(key, value));
    } else if (key == "model.stages") {
      stages_value = value;
      stages = parse_stages(value);
    } else if (key == "model.dropout_prob") {
      cfg.model.dropout_prob = parse_double(key, value);
    } else if (key == "model.num_classes") {
      cfg.model.num_classes = static_cast<int>(parse_int(key, value));
    } else if (key == "model.input_resolution") {
      cfg.model.input_resolution = static_cast<int>(parse_int(key, value));
    } else if (key == "model.se_ratio") {
      se_ratio = parse_double(key, value);
    } else if (key == "model.survival_prob") {
      survival_prob = parse_double(key, value);
    } else if (key == "train.batch_size") {
      cfg.train.batch_size = static_cast<int>(parse_int(key, value));
    } else if (key == "train.optimizer") {
      if (value == "adam") {
        cfg.train.optimizer = OptimizerKind::Adam;
      } else if (value == "sgd") {
        cfg.train.optimizer = OptimizerKind::Sgd;
      } else {
        throw ConfigError("train.optimizer must be adam or sgd, got '" + value + "'");
      }
    } else if (key == "train.lr0") {
      cfg.train.lr0 = parse_double(key, value);
    } else if (key == "train.lr_decay") {
      cfg.train.lr_decay = parse_double(key, value);
    } else if (key == "train.epochs") {
      cfg.train.epochs = static_cast<int>(parse_int(key, value));
    } else if (key == "train.momentum") {
      cfg.train.momentum = parse_double(key, value);
    } else if (key == "train.beta1") {
      cfg.train.beta1 = parse_double(key, value);
    } else if (key == "train.beta2") {
      cfg.train.beta2 = parse_double(key, value);
    } else if (key == "train.eps") {
      cfg.train.eps = parse_double(key, value);
    } else if (key == "augment.target_size") {
      cfg.augment.target_size = static_cast<int>(parse_int(key, value));
    } else if (key == "augment.p_hflip") {
      cfg.augment.p_hflip = parse_double(key, value);
    } else if (key == "augment.p_vflip") {
      cfg.augment.p_vflip = parse_double(key, value);
    } else if (key == "augment.p_ssr") {
      cfg.augment.p_ssr = parse_double(key, value);
    } else if (key == "augment.rotation_limit_deg") {
      cfg.augment.rotation_limit_deg = parse_double(key, value);
    } else if (key == "augment.shift_limit") {
      cfg.augment.shift_limit = parse_double(key, value);
    } else if (key == "augment.scale_limit") {
      cfg.augment.scale_limit = parse_double(key, value);
    } else if (key == "augment.p_oneof_filter") {
      cfg.augment.p_oneof_filter = parse_double(key, value);
    } else if (key == "augment.p_piecewise") {
      cfg.augment.p_piecewise = parse_double(key, value);
    } else if (key == "augment.piecewise_grid") {
      cfg.augment.piecewise_grid = static_cast<int>(parse_int(key, value));
    } else if (key == "augment.piecewise_sigma") {
      cfg.augment.piecewise_sigma = parse_double(key, value);
    } else if (key == "augment.channel_mean") {
      cfg.augment.channel_mean = parse_triple(key, value);
    } else if (key == "augment.channel_std") {
      cfg.augment.channel_std = parse_triple(key, value);
    } else if (key == "selftrain.iterations") {
      cfg.selftrain.iterations = static_cast<int>(parse_int(key, value));
    } else if (key == "selftrain.label_mode") {
      if (value == "soft") {
        cfg.selftrain.label_mode = LabelMode::Soft;
      } else if (value == "hard") {
        cfg.selftrain.label_mode = LabelMode::Hard;
      } else {
        throw ConfigError("selftrain.label_mode must be soft or hard, got '" + value + "'");
      }
    } else if (key == "selftrain.confidence_threshold") {
      cfg.selftrain.confidence_threshold = parse_double(key, value);
    } else if (key == "selftrain.growth") {
      cfg.selftrain.student_growth = parse_growth(value);
    } else if (key == "selftrain.dropout_prob") {
      cfg.selftrain.noise.dropout_prob = parse_double(key, value);
    } else if (key == "selftrain.survival_prob") {
      cfg.selftrain.noise.survival_prob = parse_double(key, value);
    } else if (key == "selftrain.augment") {
      cfg.selftrain.noise.augment = parse_bool(key, value);
    } else if (key == "scaling.alpha") {
      cfg.scaling.alpha = parse_double(key, value);
    } else if (key == "scaling.beta") {
      cfg.scaling.beta = parse_double(key, value);
    } else if (key == "scaling.gamma") {
      cfg.scaling.gamma = parse_double(key, value);
    } else if (key == "scaling.phi") {
      cfg.scaling.phi = parse_double(key, value);
    } else if (key == "scaling.apply") {
      cfg.scaling_apply = parse_bool(key, value);
    } else if (key == "search.grid_step") {
      cfg.search.grid_step = parse_double(key, value);
    } else if (key == "search.tolerance") {
      cfg.search.tolerance = parse_double(key, value);
    } else if (key == "search.objective") {
      if (value != "none" && value != "val_auc") {
        throw ConfigError("search.objective must be none or val_auc, got '" + value + "'");
      }
      cfg.search.objective = value;
    } else if (key == "search.epochs") {
      cfg.search.epochs = static_cast<int>(parse_int(key, value));
    } else if (key == "search.max_candidates") {
      cfg.search.max_candidates = static_cast<int>(parse_int(key, value));
    } else if (key == "synthetic.count") {
      cfg.synthetic.count = static_cast<int>(parse_int(key, value));
    } else if (key == "synthetic.size") {
      cfg.synthetic.size = static_cast<int>(parse_int(key, value));
    } else if (key == "synthetic.noise") {
      cfg.synthetic.noise = parse_double(key, value);
    } else if (key == "synthetic.contrast") {
      cfg.synthetic.contrast = parse_double(key, value);
    } else if (key == "synthetic.unlabeled_count") {
      cfg.synthetic.unlabeled_count = static_cast<int>(parse_int(key, value));
    } else if (key == "ensemble.weights") {
      cfg.ensemble_weights.clear();
      for (const std::string& w : split(value, ',')) {
        if (!w.empty()) cfg.ensemble_weights.push_back(parse_double(key, w));
      }
    } else {
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": unknown config key '" + key +
                        "'");
    }
  }

  // Assemble the block list from stage definitions.
  cfg.model.blocks.clear();
  int prev = cfg.model.stem_channels;
  for (const StageDef& s : stages) {
    if (s.out < 1 || s.repeat < 1 || (s.stride != 1 && s.stride != 2) || s.expansion < 1.0) {
      throw ConfigError("model.stages entry with out=" + std::to_string(s.out) + " is invalid");
    }
    BlockConfig lead;
    lead.in_channels = prev;
    lead.out_channels = s.out;
    lead.stride = s.stride;
    lead.expansion_ratio = s.expansion;
    lead.se_ratio = se_ratio;
    lead.survival_prob = survival_prob;
    cfg.model.blocks.push_back(lead);
    BlockConfig repeat = lead;
    repeat.in_channels = s.out;
    repeat.stride = 1;
    for (int i = 1; i < s.repeat; ++i) cfg.model.blocks.push_back(repeat);
    prev = s.out;
  }

  cfg.selftrain.train_cfg = cfg.train;
  cfg.selftrain.train_cfg.seed = cfg.seed;
  cfg.train.seed = cfg.seed;
  cfg.synthetic.seed = cfg.seed;
  cfg.augment.target_size = cfg.model.input_resolution;
  return cfg;
}

RunConfig parse_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_run_config_text(buffer.str(), path);
}

std::vector<std::pair<std::string, std::string>> run_config_echo(const RunConfig& cfg) {
  std::vector<std::pair<std::string, std::string>> kv;
  auto put = [&](const std::string& k, const std::string& v) { kv.emplace_back(k, v); };
  put("seed", std::to_string(cfg.seed));
  put("data.labels_csv", cfg.labels_csv);
  put("data.images_dir", cfg.images_dir);
  put("data.unlabeled_dir", cfg.unlabeled_dir);
  put("data.train_fraction", fmt_double(cfg.train_fraction));
  put("model.stem_channels", std::to_string(cfg.model.stem_channels));
  {
    std::ostringstream os;
    for (std::size_t i = 0; i < cfg.model.blocks.size(); ++i) {
      const BlockConfig& b = cfg.model.blocks[i];
      if (i) os << ", ";
      os << b.in_channels << "->" << b.out_channels << " s" << b.stride << " e"
         << b.expansion_ratio << " se" << b.se_ratio << " sp" << b.survival_prob;
    }
    put("model.blocks", os.str());
  }
  put("model.dropout_prob", fmt_double(cfg.model.dropout_prob));
  put("model.num_classes", std::to_string(cfg.model.num_classes));
  put("model.input_resolution", std::to_string(cfg.model.input_resolution));
  put("train.batch_size", std::to_string(cfg.train.batch_size));
  put("train.optimizer", cfg.train.optimizer == OptimizerKind::Adam ? "adam" : "sgd");
  put("train.lr0", fmt_double(cfg.train.lr0));
  put("train.lr_decay", fmt_double(cfg.train.lr_decay));
  put("train.epochs", std::to_string(cfg.train.epochs));
  put("train.momentum", fmt_double(cfg.train.momentum));
  put("train.beta1", fmt_double(cfg.train.beta1));
  put("train.beta2", fmt_double(cfg.train.beta2));
  put("train.eps", fmt_double(cfg.train.eps));
  put("augment.target_size", std::to_string(cfg.augment.target_size));
  put("augment.p_hflip", fmt_double(cfg.augment.p_hflip));
  put("augment.p_vflip", fmt_double(cfg.augment.p_vflip));
  put("augment.p_ssr", fmt_double(cfg.augment.p_ssr));
  put("augment.rotation_limit_deg", fmt_double(cfg.augment.rotation_limit_deg));
  put("augment.shift_limit", fmt_double(cfg.augment.shift_limit));
  put("augment.scale_limit", fmt_double(cfg.augment.scale_limit));
  put("augment.p_oneof_filter", fmt_double(cfg.augment.p_oneof_filter));
  put("augment.p_piecewise", fmt_double(cfg.augment.p_piecewise));
  put("augment.piecewise_grid", std::to_string(cfg.augment.piecewise_grid));
  put("augment.piecewise_sigma", fmt_double(cfg.augment.piecewise_sigma));
  put("selftrain.iterations", std::to_string(cfg.selftrain.iterations));
  put("selftrain.label_mode", cfg.selftrain.label_mode == LabelMode::Soft ? "soft" : "hard");
  put("selftrain.confidence_threshold", fmt_double(cfg.selftrain.confidence_threshold));
  put("selftrain.dropout_prob", fmt_double(cfg.selftrain.noise.dropout_prob));
  put("selftrain.survival_prob", fmt_double(cfg.selftrain.noise.survival_prob));
  put("selftrain.augment", cfg.selftrain.noise.augment ? "true" : "false");
  put("scaling.alpha", fmt_double(cfg.scaling.alpha));
  put("scaling.beta", fmt_double(cfg.scaling.beta));
  put("scaling.gamma", fmt_double(cfg.scaling.gamma));
  put("scaling.phi", fmt_double(cfg.scaling.phi));
  put("scaling.apply", cfg.scaling_apply ? "true" : "false");
  put("synthetic.count", std::to_string(cfg.synthetic.count));
  put("synthetic.size", std::to_string(cfg.synthetic.size));
  put("synthetic.noise", fmt_double(cfg.synthetic.noise));
  put("synthetic.contrast", fmt_double(cfg.synthetic.contrast));
  put("synthetic.unlabeled_count", std::to_string(cfg.synthetic.unlabeled_count));
  return kv;
}

}  // namespace leafnet
