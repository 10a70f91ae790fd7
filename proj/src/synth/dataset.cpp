#include "draco/synth/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

#include <opencv2/imgcodecs.hpp>

#include "draco/error.hpp"

namespace draco::synth {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json pose_json(const Pose& p) { return {{"x", p.x}, {"y", p.y}, {"theta", p.theta}}; }

void write_png(const fs::path& path, const cv::Mat& img) {
  if (!cv::imwrite(path.string(), img)) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
}

[[noreturn]] void schema_error(const std::string& record, const std::string& what) {
  throw Error(ErrorCode::kSchemaMismatch, "record '" + record + "': " + what);
}

Pose pose_from(const json& j, const std::string& record) {
  if (!j.is_object() || !j.contains("x") || !j.contains("y") || !j.contains("theta")) {
    schema_error(record, "pose needs x, y, theta");
  }
  return {j.at("x").get<double>(), j.at("y").get<double>(), j.at("theta").get<double>()};
}

cv::Mat read_gray(const fs::path& path, const std::string& record) {
  if (!fs::exists(path)) schema_error(record, "missing image file " + path.string());
  cv::Mat img = cv::imread(path.string(), cv::IMREAD_GRAYSCALE);
  if (img.empty()) schema_error(record, "unreadable image file " + path.string());
  return img;
}

}  // namespace

json sample_record(const DualModalSample& s) {
  const auto& p = s.synthesis;
  return {
      {"id", s.id},
      {"finger_id", s.finger_id},
      {"impression_id", s.impression_id},
      {"label", pose_json(s.label)},
      {"patch", "patches/" + s.id + ".png"},
      {"cap", "cap/" + s.id + ".png"},
      {"source", {{"plain", s.source}, {"pose", pose_json(s.source_pose)}}},
      {"synthesis",
       {{"crop_center", {p.crop_center.x, p.crop_center.y}},
        {"crop_angle", p.crop_angle},
        {"rot_range", p.rot_range},
        {"trans_range", p.trans_range},
        {"grid", p.grid},
        {"attempts", p.attempts}}},
  };
}

fs::path write_dataset(const std::vector<DualModalSample>& samples, const fs::path& dir,
                       const json& provenance) {
  std::error_code ec;
  fs::create_directories(dir / "patches", ec);
  fs::create_directories(dir / "cap", ec);
  if (ec) throw Error(ErrorCode::kIoError, "cannot create " + dir.string() + ": " + ec.message());

  const fs::path manifest = dir / kManifestName;
  std::ofstream out(manifest, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + manifest.string());

  for (const auto& s : samples) {
    if (s.id.empty()) throw Error(ErrorCode::kSchemaMismatch, "sample without id");
    write_png(dir / "patches" / (s.id + ".png"), s.patch.pixels);
    cv::Mat cap8;
    s.cap.pixels.convertTo(cap8, CV_8U, 255.0);  // rounds to nearest
    write_png(dir / "cap" / (s.id + ".png"), cap8);
    out << sample_record(s).dump() << '\n';
  }
  if (!out) throw Error(ErrorCode::kIoError, "write failed for " + manifest.string());

  if (!provenance.is_null()) {
    std::ofstream prov(dir / kProvenanceName, std::ios::binary | std::ios::trunc);
    prov << provenance.dump(2) << '\n';
    if (!prov) throw Error(ErrorCode::kIoError, "cannot write provenance in " + dir.string());
  }
  return manifest;
}

std::vector<DualModalSample> read_dataset(const fs::path& dir) {
  const fs::path manifest = dir / kManifestName;
  std::ifstream in(manifest);
  if (!in) throw Error(ErrorCode::kIoError, "cannot read " + manifest.string());

  std::vector<DualModalSample> samples;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::exception& e) {
      schema_error("line " + std::to_string(line_no), e.what());
    }
    const std::string name = rec.value("id", "line " + std::to_string(line_no));
    try {
      for (const char* key : {"id", "finger_id", "impression_id", "label", "patch", "cap"}) {
        if (!rec.contains(key)) schema_error(name, std::string("missing field '") + key + "'");
      }
      DualModalSample s;
      s.id = rec.at("id").get<std::string>();
      s.finger_id = rec.at("finger_id").get<std::string>();
      s.impression_id = rec.at("impression_id").get<std::string>();
      s.label = pose_from(rec.at("label"), name);
      s.patch.pixels = read_gray(dir / rec.at("patch").get<std::string>(), name);
      if (s.patch.pixels.rows != kPatchSize || s.patch.pixels.cols != kPatchSize) {
        schema_error(name, "patch is not 132x132");
      }
      cv::Mat cap8 = read_gray(dir / rec.at("cap").get<std::string>(), name);
      if (cap8.rows != cap8.cols) schema_error(name, "capacitive grid is not square");
      cap8.convertTo(s.cap.pixels, CV_32F, 1.0 / 255.0);
      if (rec.contains("source")) {
        const json& src = rec.at("source");
        s.source = src.value("plain", "");
        if (src.contains("pose")) s.source_pose = pose_from(src.at("pose"), name);
      }
      if (rec.contains("synthesis")) {
        const json& p = rec.at("synthesis");
        auto& sp = s.synthesis;
        if (p.contains("crop_center")) {
          sp.crop_center = {p.at("crop_center").at(0).get<double>(),
                            p.at("crop_center").at(1).get<double>()};
        }
        sp.crop_angle = p.value("crop_angle", 0.0);
        sp.rot_range = p.value("rot_range", 0.0);
        sp.trans_range = p.value("trans_range", 0.0);
        sp.grid = p.value("grid", s.cap.pixels.rows);
        sp.attempts = p.value("attempts", 1);
      }
      samples.push_back(std::move(s));
    } catch (const json::exception& e) {
      schema_error(name, e.what());
    }
  }
  return samples;
}

PlainFingerprint read_plain(const fs::path& file, const Pose& pose, std::string finger_id,
                            std::string impression_id) {
  PlainFingerprint fp;
  fp.pixels = cv::imread(file.string(), cv::IMREAD_GRAYSCALE);
  if (fp.pixels.empty()) throw Error(ErrorCode::kIoError, "cannot read plain " + file.string());
  if (fp.pixels.rows < 400 || fp.pixels.cols < 400) {
    throw Error(ErrorCode::kSchemaMismatch, "plain " + file.string() + " is smaller than 400x400");
  }
  fp.pose = pose;
  fp.finger_id = std::move(finger_id);
  fp.impression_id = std::move(impression_id);
  fp.source = fs::absolute(file).lexically_normal().string();
  return fp;
}

std::vector<PlainFingerprint> read_plains(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::kIoError, "not a directory: " + dir.string());

  std::vector<PlainFingerprint> plains;
  const fs::path index = dir / kPlainIndexName;
  if (fs::exists(index)) {
    std::ifstream in(index);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const json rec = json::parse(line);
      const std::string file = rec.at("file").get<std::string>();
      plains.push_back(read_plain(dir / file, pose_from(rec.at("pose"), file),
                                  rec.at("finger_id").get<std::string>(),
                                  rec.value("impression_id", "0")));
    }
  } else {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (entry.is_regular_file() && entry.path().extension() == ".png") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      const std::string stem = f.stem().string();
      const auto cut = stem.find('_');
      const std::string finger = stem.substr(0, cut);
      const std::string impression = cut == std::string::npos ? "0" : stem.substr(cut + 1);
      cv::Mat probe = cv::imread(f.string(), cv::IMREAD_GRAYSCALE);
      if (probe.empty()) throw Error(ErrorCode::kIoError, "cannot read plain " + f.string());
      const Pose standardized{(probe.cols - 1) / 2.0, (probe.rows - 1) / 2.0, 0.0};
      plains.push_back(read_plain(f, standardized, finger, impression));
    }
  }
  if (plains.empty()) throw Error(ErrorCode::kIoError, "no plain fingerprints in " + dir.string());
  return plains;
}

void write_plains(const std::vector<PlainFingerprint>& plains, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIoError, "cannot create " + dir.string());
  std::ofstream index(dir / kPlainIndexName, std::ios::binary | std::ios::trunc);
  for (const auto& fp : plains) {
    const std::string file = fp.finger_id + "_" + fp.impression_id + ".png";
    write_png(dir / file, fp.pixels);
    index << json{{"file", file},
                  {"finger_id", fp.finger_id},
                  {"impression_id", fp.impression_id},
                  {"pose", pose_json(fp.pose)}}
                 .dump()
          << '\n';
  }
  if (!index) throw Error(ErrorCode::kIoError, "cannot write plain index in " + dir.string());
}

}  // namespace draco::synth
