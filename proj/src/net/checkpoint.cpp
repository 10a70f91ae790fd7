#include "draco/net/checkpoint.hpp"

#include <fstream>

#include "draco/error.hpp"
#include "draco/hash.hpp"

namespace draco::net {

namespace fs = std::filesystem;
using nlohmann::json;

fs::path sidecar_path(const fs::path& weights) {
  fs::path p = weights;
  p.replace_extension(".json");
  return p;
}

json codec_to_json(const codec::PoseCodec& c) {
  auto table = [](const codec::ClassEmbeddingTable& t) {
    return json{{"lo", t.lo}, {"hi", t.hi}, {"n", t.n}};
  };
  return {{"position", table(c.position)},
          {"trig", table(c.trig)},
          {"sigma_pos", c.sigma_pos},
          {"sigma_trig", c.sigma_trig}};
}

codec::PoseCodec codec_from_json(const json& j) {
  codec::PoseCodec c;
  auto table = [](const json& t) {
    return codec::build_embeddings(t.at("lo").get<double>(), t.at("hi").get<double>(),
                                   t.at("n").get<std::size_t>());
  };
  if (j.contains("position")) c.position = table(j.at("position"));
  if (j.contains("trig")) c.trig = table(j.at("trig"));
  c.sigma_pos = j.value("sigma_pos", c.sigma_pos);
  c.sigma_trig = j.value("sigma_trig", c.sigma_trig);
  return c;
}

void require_same_codec(const codec::PoseCodec& a, const codec::PoseCodec& b) {
  const json ja = codec_to_json(a);
  const json jb = codec_to_json(b);
  for (const auto& [key, value] : ja.items()) {
    if (value != jb.at(key)) {
      throw Error(ErrorCode::kConfigError, "codec mismatch in '" + key + "': checkpoint " +
                                               jb.at(key).dump() + " vs config " + value.dump());
    }
  }
}

void save_checkpoint(DracoModel& model, const fs::path& weights, const codec::PoseCodec& codec,
                     const json& provenance) {
  if (weights.has_parent_path()) fs::create_directories(weights.parent_path());
  try {
    torch::serialize::OutputArchive archive;
    model->save(archive);
    archive.save_to(weights.string());
  } catch (const c10::Error& e) {
    throw Error(ErrorCode::kIoError, "cannot write checkpoint " + weights.string());
  }
  const json sidecar{{"model", to_json(model->config())},
                     {"codec", codec_to_json(codec)},
                     {"parameter_count", model->parameter_count()},
                     {"weights_sha256", sha256_file(weights)},
                     {"provenance", provenance}};
  std::ofstream out(sidecar_path(weights), std::ios::binary | std::ios::trunc);
  out << sidecar.dump(2) << '\n';
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + sidecar_path(weights).string());
}

LoadedCheckpoint load_checkpoint(const fs::path& weights) {
  const fs::path side = sidecar_path(weights);
  std::ifstream in(side);
  if (!in || !fs::exists(weights)) {
    throw Error(ErrorCode::kIoError, "missing checkpoint " + weights.string() + " or its sidecar");
  }
  LoadedCheckpoint out;
  try {
    out.sidecar = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kSchemaMismatch, "bad checkpoint sidecar " + side.string());
  }
  out.model = DracoModel(model_from_json(out.sidecar.at("model")));
  out.codec = codec_from_json(out.sidecar.value("codec", json::object()));
  try {
    torch::serialize::InputArchive archive;
    archive.load_from(weights.string());
    out.model->load(archive);
  } catch (const c10::Error& e) {
    throw Error(ErrorCode::kSchemaMismatch, "checkpoint " + weights.string() +
                                                " does not match its recorded architecture");
  }
  out.model->eval();
  out.weights_hash = sha256_file(weights);
  return out;
}

}  // namespace draco::net
