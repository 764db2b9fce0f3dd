#include "plcutseg/trainer/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "plcutseg/common.hpp"

// Payload doubles are written raw; the format is pinned to little-endian hosts.
static_assert(std::endian::native == std::endian::little,
              "checkpoint format requires a little-endian host");

namespace plcutseg::trainer {

using nlohmann::json;
using tensor::Tensor;

namespace {

constexpr char kMagic[8] = {'P', 'L', 'C', 'S', 'E', 'G', '0', '1'};
constexpr int kFormatVersion = 1;

json shape_json(const Tensor& t) {
  json arr = json::array();
  for (int d : t.shape()) arr.push_back(d);
  return arr;
}

std::vector<int> shape_from_json(const json& arr) {
  std::vector<int> shape;
  for (const auto& d : arr) shape.push_back(d.get<int>());
  return shape;
}

void write_payload(std::ofstream& out, const Tensor& t) {
  out.write(reinterpret_cast<const char*>(t.data()),
            static_cast<std::streamsize>(t.numel() * sizeof(double)));
}

Tensor read_payload(std::ifstream& in, const std::vector<int>& shape) {
  Tensor t(shape);
  in.read(reinterpret_cast<char*>(t.data()),
          static_cast<std::streamsize>(t.numel() * sizeof(double)));
  expect(in.good(), "checkpoint truncated while reading tensor payload");
  return t;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& file, const CheckpointState& state) {
  json header;
  header["format"] = "plcutseg-checkpoint";
  header["version"] = kFormatVersion;
  header["epoch"] = state.epoch;
  header["best_mdice"] = state.best_mdice;
  header["config"] = state.config;

  json groups = json::array();
  for (const auto& [name, t] : state.groups)
    groups.push_back({{"name", name}, {"shape", shape_json(t)}});
  header["groups"] = groups;

  json opts = json::array();
  for (const auto& o : state.optimizers) {
    require(o.m.size() == o.v.size(), "optimizer state: moment list sizes differ");
    json shapes = json::array();
    for (const auto& t : o.m) shapes.push_back(shape_json(t));
    opts.push_back({{"name", o.name}, {"step_count", o.step_count}, {"shapes", shapes}});
  }
  header["optimizers"] = opts;

  json ids = json::array();
  for (const auto& [id, mask] : state.pseudo_labels) {
    require(mask.shape() == std::vector<int>({state.pl_h, state.pl_w}),
            "pseudo-label tensor shape mismatch for id: " + id);
    ids.push_back(id);
  }
  header["pl"] = {{"version", state.pl_version}, {"h", state.pl_h}, {"w", state.pl_w}, {"ids", ids}};

  const std::string header_bytes = header.dump();
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  expect(out.good(), "cannot open checkpoint for writing: " + file.string());
  out.write(kMagic, sizeof(kMagic));
  const std::uint64_t len = header_bytes.size();
  out.write(reinterpret_cast<const char*>(&len), sizeof(len));
  out.write(header_bytes.data(), static_cast<std::streamsize>(len));
  for (const auto& [_, t] : state.groups) write_payload(out, t);
  for (const auto& o : state.optimizers) {
    for (const auto& t : o.m) write_payload(out, t);
    for (const auto& t : o.v) write_payload(out, t);
  }
  for (const auto& [_, mask] : state.pseudo_labels) write_payload(out, mask);
  out.flush();
  expect(out.good(), "write failure on checkpoint: " + file.string());
}

CheckpointState load_checkpoint(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  expect(in.good(), "cannot open checkpoint: " + file.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  expect(in.good() && std::memcmp(magic, kMagic, sizeof(kMagic)) == 0,
          "not a checkpoint file (bad magic): " + file.string());
  std::uint64_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  expect(in.good(), "checkpoint truncated in header length");
  std::string header_bytes(len, '\0');
  in.read(header_bytes.data(), static_cast<std::streamsize>(len));
  expect(in.good(), "checkpoint truncated in header");

  json header;
  try {
    header = json::parse(header_bytes);
  } catch (const json::exception& e) {
    throw RuntimeError("checkpoint header parse error: " + std::string(e.what()));
  }
  expect(header.at("format").get<std::string>() == "plcutseg-checkpoint",
          "unexpected checkpoint format tag");
  expect(header.at("version").get<int>() == kFormatVersion,
          "unsupported checkpoint format version");

  CheckpointState state;
  state.epoch = header.at("epoch").get<int>();
  state.best_mdice = header.at("best_mdice").get<double>();
  state.config = header.at("config");

  for (const auto& g : header.at("groups")) {
    auto shape = shape_from_json(g.at("shape"));
    state.groups.emplace_back(g.at("name").get<std::string>(), read_payload(in, shape));
  }
  for (const auto& o : header.at("optimizers")) {
    OptimizerState os;
    os.name = o.at("name").get<std::string>();
    os.step_count = o.at("step_count").get<long long>();
    std::vector<std::vector<int>> shapes;
    for (const auto& s : o.at("shapes")) shapes.push_back(shape_from_json(s));
    for (const auto& s : shapes) os.m.push_back(read_payload(in, s));
    for (const auto& s : shapes) os.v.push_back(read_payload(in, s));
    state.optimizers.push_back(std::move(os));
  }
  const auto& pl = header.at("pl");
  state.pl_version = pl.at("version").get<int>();
  state.pl_h = pl.at("h").get<int>();
  state.pl_w = pl.at("w").get<int>();
  for (const auto& id : pl.at("ids"))
    state.pseudo_labels.emplace_back(id.get<std::string>(),
                                     read_payload(in, {state.pl_h, state.pl_w}));
  return state;
}

}  // namespace plcutseg::trainer
