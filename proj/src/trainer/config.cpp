#include "plcutseg/trainer/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>

namespace plcutseg::trainer {

using nlohmann::json;

void TrainConfig::validate() const {
  require(epochs >= 1, "train.epochs must be >= 1");
  require(batch_size >= 2 && batch_size % 2 == 0, "train.batch_size must be even and >= 2");
  require(beta >= 0.0 && beta <= 100.0, "train.beta must lie in [0,100]");
  require(lr_translation >= 0.0 && lr_segmentation >= 0.0, "learning rates must be >= 0");
  require(adam_beta1 >= 0.0 && adam_beta1 < 1.0 && adam_beta2 >= 0.0 && adam_beta2 < 1.0,
          "adam momentum values must lie in [0,1)");
  require(lambda_xs >= 0.0 && lambda_xr >= 0.0 && lambda_s >= 0.0, "loss weights must be >= 0");
  require(mixup_alpha > 0.0, "train.mixup_alpha must be > 0");
  require(confidence_threshold > 0.5 && confidence_threshold < 1.0,
          "train.confidence_threshold must lie in (0.5, 1)");
  if (mode == data::TrainingMode::SelfSup)
    require(beta == 0.0, "self-sup mode requires train.beta == 0");
}

void TranslationConfig::validate() const {
  require(ngf >= 1 && ndf >= 1 && n_res >= 0, "translation channel counts must be positive");
  require(embed_dim >= 1 && n_patches >= 1, "translation.embed_dim and n_patches must be >= 1");
  require(tau > 0.0, "translation.tau must be > 0");
}

void SegmentationConfig::validate() const {
  require(!backbone.empty(), "segmentation.backbone must be set");
  require(base_channels >= 1, "segmentation.base_channels must be >= 1");
}

void RunConfig::validate() const {
  require(!output_dir.empty(), "output_dir must be set");
  require(workers >= 1, "workers must be >= 1");
  train.validate();
  augment.validate();
  translation.validate();
  segmentation.validate();
  std::set<std::string> names;
  for (const auto& ds : eval_datasets) {
    require(!ds.name.empty() && !ds.root.empty(), "eval datasets need name and root");
    require(names.insert(ds.name).second, "duplicate eval dataset name: " + ds.name);
  }
}

namespace {

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  require(j.is_object(), "config section '" + where + "' must be an object");
  for (const auto& [key, _] : j.items()) {
    bool known = false;
    for (const char* a : allowed)
      if (key == a) { known = true; break; }
    expect(known, "unknown config key '" + where + "." + key + "'");
  }
}

template <typename T>
void read_into(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

TrainConfig parse_train(const json& j) {
  check_keys(j, "train",
             {"mode", "beta", "epochs", "batch_size", "lr_translation", "lr_segmentation",
              "adam_beta1", "adam_beta2", "lambda_xs", "lambda_xr", "lambda_s", "pseudo_labels",
              "mixup", "mixup_alpha", "confidence_mask", "confidence_threshold", "seed"});
  TrainConfig c;
  if (j.contains("mode")) c.mode = data::training_mode_from(j.at("mode").get<std::string>());
  read_into(j, "beta", c.beta);
  read_into(j, "epochs", c.epochs);
  read_into(j, "batch_size", c.batch_size);
  read_into(j, "lr_translation", c.lr_translation);
  read_into(j, "lr_segmentation", c.lr_segmentation);
  read_into(j, "adam_beta1", c.adam_beta1);
  read_into(j, "adam_beta2", c.adam_beta2);
  read_into(j, "lambda_xs", c.lambda_xs);
  read_into(j, "lambda_xr", c.lambda_xr);
  read_into(j, "lambda_s", c.lambda_s);
  read_into(j, "pseudo_labels", c.pseudo_labels);
  read_into(j, "mixup", c.mixup);
  read_into(j, "mixup_alpha", c.mixup_alpha);
  read_into(j, "confidence_mask", c.confidence_mask);
  read_into(j, "confidence_threshold", c.confidence_threshold);
  read_into(j, "seed", c.seed);
  return c;
}

data::AugmentationConfig parse_augment(const json& j) {
  check_keys(j, "augment",
             {"source_size", "crop_size", "hflip_prob", "vflip_prob", "rot_min_deg", "rot_max_deg"});
  data::AugmentationConfig c;
  read_into(j, "source_size", c.source_size);
  read_into(j, "crop_size", c.crop_size);
  read_into(j, "hflip_prob", c.hflip_prob);
  read_into(j, "vflip_prob", c.vflip_prob);
  read_into(j, "rot_min_deg", c.rot_min_deg);
  read_into(j, "rot_max_deg", c.rot_max_deg);
  return c;
}

TranslationConfig parse_translation(const json& j) {
  check_keys(j, "translation", {"ngf", "n_res", "ndf", "embed_dim", "n_patches", "tau"});
  TranslationConfig c;
  read_into(j, "ngf", c.ngf);
  read_into(j, "n_res", c.n_res);
  read_into(j, "ndf", c.ndf);
  read_into(j, "embed_dim", c.embed_dim);
  read_into(j, "n_patches", c.n_patches);
  read_into(j, "tau", c.tau);
  return c;
}

SegmentationConfig parse_segmentation(const json& j) {
  check_keys(j, "segmentation", {"backbone", "base_channels"});
  SegmentationConfig c;
  read_into(j, "backbone", c.backbone);
  read_into(j, "base_channels", c.base_channels);
  return c;
}

std::vector<EvalDataset> parse_eval(const json& j) {
  check_keys(j, "eval", {"datasets"});
  std::vector<EvalDataset> out;
  if (!j.contains("datasets")) return out;
  const auto& arr = j.at("datasets");
  require(arr.is_array(), "eval.datasets must be an array");
  for (std::size_t i = 0; i < arr.size(); ++i) {
    check_keys(arr[i], "eval.datasets[" + std::to_string(i) + "]", {"name", "root"});
    EvalDataset ds;
    read_into(arr[i], "name", ds.name);
    read_into(arr[i], "root", ds.root);
    out.push_back(std::move(ds));
  }
  return out;
}

}  // namespace

RunConfig parse_run_config(const json& doc) {
  check_keys(doc, "<root>",
             {"output_dir", "data", "workers", "train", "augment", "translation", "segmentation",
              "eval"});
  RunConfig cfg;
  read_into(doc, "output_dir", cfg.output_dir);
  read_into(doc, "workers", cfg.workers);
  if (doc.contains("data")) {
    check_keys(doc.at("data"), "data", {"manifest"});
    read_into(doc.at("data"), "manifest", cfg.manifest);
  }
  if (doc.contains("train")) cfg.train = parse_train(doc.at("train"));
  if (doc.contains("augment")) cfg.augment = parse_augment(doc.at("augment"));
  if (doc.contains("translation")) cfg.translation = parse_translation(doc.at("translation"));
  if (doc.contains("segmentation")) cfg.segmentation = parse_segmentation(doc.at("segmentation"));
  if (doc.contains("eval")) cfg.eval_datasets = parse_eval(doc.at("eval"));
  if (const char* env = std::getenv("PLCUTSEG_OUTPUT_DIR"); env && *env) cfg.output_dir = env;
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  require(in.good(), "cannot open config file: " + file.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ContractError("config parse error in " + file.string() + ": " + e.what());
  }
  return parse_run_config(doc);
}

nlohmann::json run_config_to_json(const RunConfig& cfg) {
  json doc;
  doc["output_dir"] = cfg.output_dir;
  doc["workers"] = cfg.workers;
  doc["data"] = {{"manifest", cfg.manifest}};
  const auto& t = cfg.train;
  doc["train"] = {{"mode", data::training_mode_name(t.mode)},
                  {"beta", t.beta},
                  {"epochs", t.epochs},
                  {"batch_size", t.batch_size},
                  {"lr_translation", t.lr_translation},
                  {"lr_segmentation", t.lr_segmentation},
                  {"adam_beta1", t.adam_beta1},
                  {"adam_beta2", t.adam_beta2},
                  {"lambda_xs", t.lambda_xs},
                  {"lambda_xr", t.lambda_xr},
                  {"lambda_s", t.lambda_s},
                  {"pseudo_labels", t.pseudo_labels},
                  {"mixup", t.mixup},
                  {"mixup_alpha", t.mixup_alpha},
                  {"confidence_mask", t.confidence_mask},
                  {"confidence_threshold", t.confidence_threshold},
                  {"seed", t.seed}};
  const auto& a = cfg.augment;
  doc["augment"] = {{"source_size", a.source_size},   {"crop_size", a.crop_size},
                    {"hflip_prob", a.hflip_prob},     {"vflip_prob", a.vflip_prob},
                    {"rot_min_deg", a.rot_min_deg},   {"rot_max_deg", a.rot_max_deg}};
  const auto& tr = cfg.translation;
  doc["translation"] = {{"ngf", tr.ngf},           {"n_res", tr.n_res},
                        {"ndf", tr.ndf},           {"embed_dim", tr.embed_dim},
                        {"n_patches", tr.n_patches}, {"tau", tr.tau}};
  doc["segmentation"] = {{"backbone", cfg.segmentation.backbone},
                         {"base_channels", cfg.segmentation.base_channels}};
  json ds = json::array();
  for (const auto& d : cfg.eval_datasets) ds.push_back({{"name", d.name}, {"root", d.root}});
  doc["eval"] = {{"datasets", ds}};
  return doc;
}

std::vector<AblationEntry> ablation_grid(const RunConfig& base) {
  struct Variant {
    const char* name;
    bool pl, mix, conf;
  };
  const Variant variants[] = {{"baseline", false, false, false},
                              {"+pl", true, false, false},
                              {"+pl+mixup", true, true, false},
                              {"+pl+mixup+conf", true, true, true}};
  const double betas[] = {0.0, 15.0, 30.0};
  std::vector<AblationEntry> out;
  for (const auto& v : variants) {
    for (double beta : betas) {
      RunConfig cfg = base;
      cfg.train.pseudo_labels = v.pl;
      cfg.train.mixup = v.mix;
      cfg.train.confidence_mask = v.conf;
      cfg.train.beta = beta;
      cfg.train.mode = beta == 0.0 ? data::TrainingMode::SelfSup : data::TrainingMode::SemiSup;
      out.push_back({v.name, beta, std::move(cfg)});
    }
  }
  return out;
}

}  // namespace plcutseg::trainer
