#include "activeloop/io.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "activeloop/common.hpp"

namespace activeloop {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kSchemaVersion = 1;
constexpr char kBinaryMagic[4] = {'A', 'A', 'L', '3'};
constexpr std::uint16_t kBinaryVersion = 1;

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

json scene_config_to_json(const SceneConfig& cfg) {
  json classes = json::array();
  for (const ClassSpec& c : cfg.classes) {
    classes.push_back({{"name", c.name},
                       {"l", c.mean_dims.x()},
                       {"w", c.mean_dims.y()},
                       {"h", c.mean_dims.z()},
                       {"weight", c.weight}});
  }
  return {{"num_sequences", cfg.num_sequences},
          {"frames_per_sequence", cfg.frames_per_sequence},
          {"classes", classes},
          {"objects_min", cfg.objects_min},
          {"objects_max", cfg.objects_max},
          {"range_max", cfg.range_max},
          {"density_n0", cfg.density_n0},
          {"d0", cfg.d0},
          {"noise_sigma", cfg.noise_sigma},
          {"dims_jitter", cfg.dims_jitter},
          {"speed_max", cfg.speed_max},
          {"clutter_points", cfg.clutter_points},
          {"seed", cfg.seed}};
}

SceneConfig scene_config_from_json(const json& j) {
  SceneConfig cfg;
  cfg.num_sequences = j.value("num_sequences", cfg.num_sequences);
  cfg.frames_per_sequence = j.value("frames_per_sequence", cfg.frames_per_sequence);
  cfg.objects_min = j.value("objects_min", cfg.objects_min);
  cfg.objects_max = j.value("objects_max", cfg.objects_max);
  cfg.range_max = j.value("range_max", cfg.range_max);
  cfg.density_n0 = j.value("density_n0", cfg.density_n0);
  cfg.d0 = j.value("d0", cfg.d0);
  cfg.noise_sigma = j.value("noise_sigma", cfg.noise_sigma);
  cfg.dims_jitter = j.value("dims_jitter", cfg.dims_jitter);
  cfg.speed_max = j.value("speed_max", cfg.speed_max);
  cfg.clutter_points = j.value("clutter_points", cfg.clutter_points);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.classes.clear();
  if (j.contains("zipf")) {
    // shorthand: {"zipf": {"num_classes": 5, "s": 1.5}}
    int c = j["zipf"].value("num_classes", 3);
    double s = j["zipf"].value("s", 1.0);
    cfg.classes = default_scene_config(c, s).classes;
  }
  if (j.contains("classes")) {
    cfg.classes.clear();
    for (const json& jc : j["classes"]) {
      ClassSpec spec;
      spec.name = jc.value("name", std::string("class"));
      spec.mean_dims =
          Eigen::Vector3d(jc.value("l", 4.0), jc.value("w", 2.0), jc.value("h", 1.6));
      spec.weight = jc.value("weight", 1.0);
      cfg.classes.push_back(spec);
    }
  }
  return cfg;
}

json frame_to_json(const Frame& f) {
  json points = json::array();
  for (const Point& p : f.cloud.points)
    points.push_back({p.x, p.y, p.z, p.reflectance});
  json boxes = json::array();
  for (const Box3D& b : f.gt_boxes)
    boxes.push_back({b.center.x(), b.center.y(), b.center.z(), b.dims.x(), b.dims.y(),
                     b.dims.z(), b.yaw, b.class_id});
  return {{"frame_id", f.frame_id},
          {"sequence_id", f.sequence_id},
          {"index_in_sequence", f.index_in_sequence},
          {"points", points},
          {"boxes", boxes}};
}

Frame frame_from_json(const json& j) {
  Frame f;
  f.frame_id = j.at("frame_id").get<int>();
  f.sequence_id = j.at("sequence_id").get<int>();
  f.index_in_sequence = j.at("index_in_sequence").get<int>();
  for (const json& jp : j.at("points")) {
    Point p;
    p.x = jp.at(0).get<double>();
    p.y = jp.at(1).get<double>();
    p.z = jp.at(2).get<double>();
    p.reflectance = jp.at(3).get<double>();
    f.cloud.points.push_back(p);
  }
  for (const json& jb : j.at("boxes")) {
    Box3D b;
    b.center = Eigen::Vector3d(jb.at(0).get<double>(), jb.at(1).get<double>(),
                               jb.at(2).get<double>());
    b.dims = Eigen::Vector3d(jb.at(3).get<double>(), jb.at(4).get<double>(),
                             jb.at(5).get<double>());
    b.yaw = jb.at(6).get<double>();
    b.class_id = jb.at(7).get<int>();
    f.gt_boxes.push_back(b);
  }
  return f;
}

void write_u16(std::ostream& out, std::uint16_t v) {
  unsigned char b[2] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>(v >> 8)};
  out.write(reinterpret_cast<const char*>(b), 2);
}

void write_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(b), 4);
}

void write_f32(std::ostream& out, const std::vector<float>& v) {
  write_u32(out, static_cast<std::uint32_t>(v.size()));
  out.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(float)));
}

std::uint16_t read_u16(std::istream& in) {
  unsigned char b[2];
  in.read(reinterpret_cast<char*>(b), 2);
  return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

std::uint32_t read_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

std::vector<float> read_f32(std::istream& in) {
  std::uint32_t n = read_u32(in);
  std::vector<float> v(n);
  in.read(reinterpret_cast<char*>(v.data()),
          static_cast<std::streamsize>(n * sizeof(float)));
  return v;
}

void save_frame_binary(const fs::path& path, const Frame& f) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(kBinaryMagic, 4);
  write_u16(out, kBinaryVersion);
  write_u32(out, static_cast<std::uint32_t>(f.frame_id));
  write_u32(out, static_cast<std::uint32_t>(f.sequence_id));
  write_u32(out, static_cast<std::uint32_t>(f.index_in_sequence));
  std::vector<float> pts;
  pts.reserve(f.cloud.points.size() * 4);
  for (const Point& p : f.cloud.points) {
    pts.push_back(static_cast<float>(p.x));
    pts.push_back(static_cast<float>(p.y));
    pts.push_back(static_cast<float>(p.z));
    pts.push_back(static_cast<float>(p.reflectance));
  }
  write_f32(out, pts);
  std::vector<float> boxes;
  boxes.reserve(f.gt_boxes.size() * 8);
  for (const Box3D& b : f.gt_boxes) {
    boxes.push_back(static_cast<float>(b.center.x()));
    boxes.push_back(static_cast<float>(b.center.y()));
    boxes.push_back(static_cast<float>(b.center.z()));
    boxes.push_back(static_cast<float>(b.dims.x()));
    boxes.push_back(static_cast<float>(b.dims.y()));
    boxes.push_back(static_cast<float>(b.dims.z()));
    boxes.push_back(static_cast<float>(b.yaw));
    boxes.push_back(static_cast<float>(b.class_id));
  }
  write_f32(out, boxes);
}

Frame load_frame_binary(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (std::memcmp(magic, kBinaryMagic, 4) != 0)
    throw DataError(path.string() + ": bad magic bytes");
  std::uint16_t version = read_u16(in);
  if (version != kBinaryVersion)
    throw DataError(path.string() + ": unsupported binary version");
  Frame f;
  f.frame_id = static_cast<int>(read_u32(in));
  f.sequence_id = static_cast<int>(read_u32(in));
  f.index_in_sequence = static_cast<int>(read_u32(in));
  std::vector<float> pts = read_f32(in);
  if (pts.size() % 4 != 0) throw DataError(path.string() + ": truncated point array");
  for (std::size_t i = 0; i < pts.size(); i += 4) {
    f.cloud.points.push_back({pts[i], pts[i + 1], pts[i + 2], pts[i + 3]});
  }
  std::vector<float> boxes = read_f32(in);
  if (boxes.size() % 8 != 0) throw DataError(path.string() + ": truncated box array");
  for (std::size_t i = 0; i < boxes.size(); i += 8) {
    Box3D b;
    b.center = Eigen::Vector3d(boxes[i], boxes[i + 1], boxes[i + 2]);
    b.dims = Eigen::Vector3d(boxes[i + 3], boxes[i + 4], boxes[i + 5]);
    b.yaw = boxes[i + 6];
    b.class_id = static_cast<int>(boxes[i + 7]);
    f.gt_boxes.push_back(b);
  }
  return f;
}

json load_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  return j;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.push_back("");
  return cells;
}

}  // namespace

void save_dataset(const fs::path& dir, const SceneConfig& cfg,
                  const std::vector<Frame>& frames, DatasetFormat format) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create " + dir.string());

  json meta = {{"schema_version", kSchemaVersion},
               {"format", format == DatasetFormat::Jsonl ? "jsonl" : "binary"},
               {"num_frames", frames.size()},
               {"config", scene_config_to_json(cfg)}};
  std::ofstream mout(dir / "meta.json");
  if (!mout) throw DataError("cannot write " + (dir / "meta.json").string());
  mout << meta.dump(2) << "\n";

  if (format == DatasetFormat::Jsonl) {
    std::ofstream out(dir / "frames.jsonl");
    if (!out) throw DataError("cannot write " + (dir / "frames.jsonl").string());
    for (const Frame& f : frames) out << frame_to_json(f).dump() << "\n";
  } else {
    fs::create_directories(dir / "frames");
    for (const Frame& f : frames) {
      char name[32];
      std::snprintf(name, sizeof(name), "%06d.bin", f.frame_id);
      save_frame_binary(dir / "frames" / name, f);
    }
  }
}

LoadedDataset load_dataset(const fs::path& dir) {
  json meta = load_json_file(dir / "meta.json");
  if (meta.value("schema_version", 0) != kSchemaVersion)
    throw DataError(dir.string() + ": unsupported dataset schema version");
  LoadedDataset ds;
  ds.config = scene_config_from_json(meta.at("config"));

  std::string format = meta.value("format", "jsonl");
  if (format == "jsonl") {
    std::ifstream in(dir / "frames.jsonl");
    if (!in) throw DataError("cannot read " + (dir / "frames.jsonl").string());
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      try {
        ds.frames.push_back(frame_from_json(json::parse(line)));
      } catch (const json::exception& e) {
        throw DataError("frames.jsonl line " + std::to_string(line_no) + ": " + e.what());
      }
    }
  } else if (format == "binary") {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir / "frames")) {
      if (entry.path().extension() == ".bin") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const fs::path& p : files) ds.frames.push_back(load_frame_binary(p));
  } else {
    throw DataError(dir.string() + ": unknown dataset format " + format);
  }
  return ds;
}

SceneConfig scene_config_from_json_file(const fs::path& path) {
  SceneConfig cfg = scene_config_from_json(load_json_file(path));
  validate(cfg);
  return cfg;
}

void save_model(const fs::path& path, const ModelState& model) {
  json weights = json::array();
  for (Eigen::Index r = 0; r < model.weights.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < model.weights.cols(); ++c) row.push_back(model.weights(r, c));
    weights.push_back(row);
  }
  json j = {{"schema_version", kSchemaVersion},
            {"num_classes", model.num_classes},
            {"weights", weights},
            {"feature_mean", std::vector<double>(model.feature_mean.data(),
                                                 model.feature_mean.data() + model.feature_mean.size())},
            {"feature_std", std::vector<double>(model.feature_std.data(),
                                                model.feature_std.data() + model.feature_std.size())},
            {"train_steps", model.train_steps},
            {"rng_stream_id", model.rng_stream_id}};
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

ModelState load_model(const fs::path& path) {
  json j = load_json_file(path);
  if (j.value("schema_version", 0) != kSchemaVersion)
    throw DataError(path.string() + ": unsupported checkpoint schema version");
  ModelState m = make_model(j.at("num_classes").get<int>(), j.at("rng_stream_id").get<std::uint64_t>());
  const json& w = j.at("weights");
  m.weights.resize(static_cast<Eigen::Index>(w.size()),
                   static_cast<Eigen::Index>(w.at(0).size()));
  for (Eigen::Index r = 0; r < m.weights.rows(); ++r)
    for (Eigen::Index c = 0; c < m.weights.cols(); ++c)
      m.weights(r, c) = w.at(static_cast<std::size_t>(r)).at(static_cast<std::size_t>(c)).get<double>();
  std::vector<double> mean = j.at("feature_mean").get<std::vector<double>>();
  std::vector<double> std_ = j.at("feature_std").get<std::vector<double>>();
  m.feature_mean = Eigen::Map<Eigen::VectorXd>(mean.data(), static_cast<Eigen::Index>(mean.size()));
  m.feature_std = Eigen::Map<Eigen::VectorXd>(std_.data(), static_cast<Eigen::Index>(std_.size()));
  m.train_steps = j.at("train_steps").get<long>();
  return m;
}

void save_run_state(const fs::path& path, const RunState& state) {
  json j = {{"schema_version", kSchemaVersion},
            {"labeled", std::vector<int>(state.pool.labeled.begin(), state.pool.labeled.end())},
            {"unlabeled", std::vector<int>(state.pool.unlabeled.begin(), state.pool.unlabeled.end())},
            {"query_history", state.pool.query_history},
            {"round", state.pool.round},
            {"next_round", state.next_round},
            {"total_visits", state.total_visits}};
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

RunState load_run_state(const fs::path& path) {
  json j = load_json_file(path);
  RunState state;
  for (int id : j.at("labeled").get<std::vector<int>>()) state.pool.labeled.insert(id);
  for (int id : j.at("unlabeled").get<std::vector<int>>()) state.pool.unlabeled.insert(id);
  state.pool.query_history = j.at("query_history").get<std::vector<std::vector<int>>>();
  state.pool.round = j.at("round").get<int>();
  state.next_round = j.at("next_round").get<int>();
  state.total_visits = j.at("total_visits").get<long>();
  return state;
}

std::vector<FrameScoreRecord> load_inference_records(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path.string());

  std::vector<FrameScoreRecord> records;
  std::string line;
  long line_no = 0;
  long probs_len = -1, emb_len = -1, grad_len = -1;
  auto fail = [&line_no, &path](const std::string& msg) -> void {
    throw DataError(path.string() + " line " + std::to_string(line_no) + ": " + msg);
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      fail(e.what());
    }
    FrameScoreRecord rec;
    try {
      rec.frame_id = j.at("frame_id").get<int>();
      rec.sequence_id = j.value("sequence_id", 0);
      rec.index_in_sequence = j.value("index_in_sequence", 0);
      bool any_passes = false;
      for (const json& jd : j.value("detections", json::array())) {
        Detection det;
        const json& box = jd.at("box");
        if (box.size() != 7) fail("box must hold 7 reals");
        det.box.center = Eigen::Vector3d(box.at(0).get<double>(), box.at(1).get<double>(),
                                         box.at(2).get<double>());
        det.box.dims = Eigen::Vector3d(box.at(3).get<double>(), box.at(4).get<double>(),
                                       box.at(5).get<double>());
        det.box.yaw = box.at(6).get<double>();
        det.box.class_id = jd.at("class").get<int>();

        std::vector<double> probs = jd.at("probs").get<std::vector<double>>();
        if (probs_len < 0) probs_len = static_cast<long>(probs.size());
        if (static_cast<long>(probs.size()) != probs_len)
          fail("probs length " + std::to_string(probs.size()) +
               " inconsistent with earlier records (" + std::to_string(probs_len) + ")");
        double sum = 0.0;
        for (double p : probs) {
          if (p < 0.0) fail("negative probability");
          sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-6)
          fail("probs sum to " + fmt("%.6f", sum) + ", expected 1 within 1e-6");
        det.probs = Eigen::Map<Eigen::VectorXd>(probs.data(),
                                                static_cast<Eigen::Index>(probs.size()));

        det.objectness = jd.value("objectness", 1.0 - probs.back());
        std::vector<double> emb = jd.at("embedding").get<std::vector<double>>();
        std::vector<double> grad = jd.at("grad_embedding").get<std::vector<double>>();
        if (emb_len < 0) emb_len = static_cast<long>(emb.size());
        if (grad_len < 0) grad_len = static_cast<long>(grad.size());
        if (static_cast<long>(emb.size()) != emb_len) fail("embedding length inconsistent");
        if (static_cast<long>(grad.size()) != grad_len)
          fail("grad_embedding length inconsistent");
        det.feature = Eigen::Map<Eigen::VectorXd>(emb.data(),
                                                  static_cast<Eigen::Index>(emb.size()));
        det.grad_embedding = Eigen::Map<Eigen::VectorXd>(
            grad.data(), static_cast<Eigen::Index>(grad.size()));
        det.point_count = jd.value("point_count", 0);
        det.distance = jd.value("distance", box_distance(det.box));
        det.score = jd.value("score", det.objectness);

        if (jd.contains("pass_probs")) {
          any_passes = true;
          std::vector<Eigen::VectorXd> passes;
          for (const json& jp : jd["pass_probs"]) {
            std::vector<double> pp = jp.get<std::vector<double>>();
            if (static_cast<long>(pp.size()) != probs_len)
              fail("pass_probs length inconsistent with probs");
            passes.push_back(Eigen::Map<Eigen::VectorXd>(
                pp.data(), static_cast<Eigen::Index>(pp.size())));
          }
          rec.pass_probs.push_back(std::move(passes));
        } else if (any_passes) {
          fail("pass_probs present on some detections but not all");
        }
        rec.detections.push_back(std::move(det));
      }
      rec.has_passes = any_passes && !rec.detections.empty();
      if (any_passes && rec.pass_probs.size() != rec.detections.size())
        fail("pass_probs present on some detections but not all");
    } catch (const json::exception& e) {
      fail(e.what());
    }
    int ed = emb_len > 0 ? static_cast<int>(emb_len) : 1;
    int gd = grad_len > 0 ? static_cast<int>(grad_len) : 1;
    Frame pseudo;
    pseudo.frame_id = rec.frame_id;
    pseudo.sequence_id = rec.sequence_id;
    pseudo.index_in_sequence = rec.index_in_sequence;
    FrameScoreRecord built = make_record(pseudo, std::move(rec.detections), ed, gd);
    built.pass_probs = std::move(rec.pass_probs);
    built.has_passes = rec.has_passes;
    records.push_back(std::move(built));
  }
  return records;
}

std::string metrics_header(int num_classes) {
  std::string h = "strategy,round,labeled_count,labeled_fraction,mAP";
  for (int c = 0; c < num_classes; ++c) h += ",ap_class_" + std::to_string(c);
  h += ",train_steps";
  return h;
}

std::string metrics_row(const std::string& strategy, const CurveRow& row) {
  std::string line = strategy + "," + std::to_string(row.round) + "," +
                     std::to_string(row.labeled_count) + "," +
                     fmt("%.6f", row.labeled_fraction) + "," + fmt("%.6f", row.mAP);
  for (double ap : row.ap) line += "," + fmt("%.6f", ap);
  line += "," + std::to_string(row.train_steps);
  return line;
}

LearningCurve load_metrics_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path.string());
  LearningCurve curve;
  std::string line;
  bool header = true;
  std::size_t num_ap = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells = split_csv_line(line);
    if (header) {
      if (cells.size() < 6) throw DataError(path.string() + ": malformed metrics header");
      num_ap = cells.size() - 6;
      header = false;
      continue;
    }
    CurveRow row;
    curve.strategy = cells.at(0);
    row.round = std::stoi(cells.at(1));
    row.labeled_count = std::stoi(cells.at(2));
    row.labeled_fraction = std::stod(cells.at(3));
    row.mAP = std::stod(cells.at(4));
    for (std::size_t c = 0; c < num_ap; ++c) row.ap.push_back(std::stod(cells.at(5 + c)));
    row.train_steps = std::stol(cells.back());
    curve.rows.push_back(row);
  }
  return curve;
}

std::string manifest_header() { return "round,rank,frame_id,score"; }

void append_manifest_rows(std::ostream& out, const SelectionResult& selection) {
  // rows sorted by frame_id within the round; the rank column keeps the
  // strategy's own ordering
  std::vector<std::pair<int, std::size_t>> rows;
  for (std::size_t rank = 0; rank < selection.selected.size(); ++rank)
    rows.emplace_back(selection.selected[rank], rank);
  std::sort(rows.begin(), rows.end());
  for (const auto& [id, rank] : rows) {
    double score = 0.0;
    auto it = selection.scores.find(id);
    if (it != selection.scores.end()) score = it->second;
    out << selection.round << "," << rank << "," << id << "," << fmt("%.9g", score)
        << "\n";
  }
}

std::vector<int> load_manifest_ids(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path.string());
  std::vector<int> ids;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (header) {
      header = false;
      continue;
    }
    std::vector<std::string> cells = split_csv_line(line);
    if (cells.size() < 3) throw DataError(path.string() + ": malformed manifest row");
    ids.push_back(std::stoi(cells.at(2)));
  }
  return ids;
}

ExperimentConfig experiment_config_from_json_file(const fs::path& path) {
  json j = load_json_file(path);
  if (j.value("schema_version", 0) != kSchemaVersion)
    throw ConfigError(path.string() + ": unsupported config schema version");
  ExperimentConfig cfg;

  const json& ds = j.at("dataset");
  if (ds.contains("synthetic") == ds.contains("path"))
    throw ConfigError("dataset: exactly one of {synthetic, path} is required");
  if (ds.contains("synthetic")) {
    cfg.synthetic = scene_config_from_json(ds["synthetic"]);
    validate(*cfg.synthetic);
  } else {
    cfg.dataset_dir = ds["path"].get<std::string>();
  }

  cfg.strategies = j.at("strategies").get<std::vector<std::string>>();
  if (cfg.strategies.empty()) throw ConfigError("strategies: empty list");
  for (const std::string& s : cfg.strategies) {
    if (!is_valid_strategy(s)) throw ConfigError("unknown strategy: " + s);
  }

  const json& sch = j.at("schedule");
  if (sch.contains("cumulative")) {
    cfg.explicit_sizes = sch["cumulative"].get<std::vector<int>>();
  } else {
    cfg.initial_count = sch.at("initial_count").get<int>();
    cfg.per_round_count = sch.at("per_round_count").get<int>();
    cfg.final_fraction = sch.at("final_fraction").get<double>();
  }

  if (j.contains("train")) {
    const json& tr = j["train"];
    cfg.train_strategy.kind = train_kind_from_string(tr.value("kind", std::string("from_scratch")));
    cfg.train_strategy.epochs_initial = tr.value("epochs_initial", 50);
    cfg.train_strategy.epochs_update = tr.value("epochs_update", 10);
    cfg.train_strategy.replay_fraction = tr.value("replay_fraction", 0.2);
    cfg.base_train.lr = tr.value("lr", 0.01);
    cfg.base_train.batch_size = tr.value("batch_size", 32);
    cfg.base_train.lr_decay = tr.value("lr_decay", 0.95);
    cfg.base_train.l2 = tr.value("l2", 1e-4);
    cfg.base_train.match_iou = tr.value("match_iou", 0.3);
  }

  if (j.contains("eval")) {
    const json& ev = j["eval"];
    std::string kind = ev.value("iou_kind", std::string("bev"));
    if (kind == "bev") cfg.eval_cfg.iou_kind = IouKind::Bev;
    else if (kind == "3d") cfg.eval_cfg.iou_kind = IouKind::Iou3d;
    else throw ConfigError("eval.iou_kind must be bev or 3d");
    cfg.eval_cfg.iou_threshold = ev.value("iou_threshold", 0.5);
    if (cfg.eval_cfg.iou_threshold <= 0.0 || cfg.eval_cfg.iou_threshold > 1.0)
      throw ConfigError("eval.iou_threshold must be in (0, 1]");
    cfg.eval_cfg.recall_points = ev.value("recall_points", 40);
  }

  if (j.contains("selection")) {
    const json& sel = j["selection"];
    std::string agg = sel.value("aggregation", std::string("mean"));
    if (agg == "mean") cfg.score.aggregation = Aggregation::Mean;
    else if (agg == "sum") cfg.score.aggregation = Aggregation::Sum;
    else if (agg == "max") cfg.score.aggregation = Aggregation::Max;
    else throw ConfigError("selection.aggregation must be mean, sum, or max");
    cfg.score.entropy_foreground_only = sel.value("entropy_foreground_only", false);
    cfg.crb.k1_factor = sel.value("k1_factor", 4);
    cfg.crb.k2_factor = sel.value("k2_factor", 2);
    cfg.crb.bins = sel.value("bins", 10);
    cfg.crb.d0 = sel.value("d0", 10.0);
    cfg.tcrb_window = sel.value("tcrb_window", 10);
    cfg.mc_passes = sel.value("mc_passes", 10);
    cfg.mc_drop_rate = sel.value("mc_drop_rate", 0.3);
    if (cfg.crb.k1_factor < cfg.crb.k2_factor || cfg.crb.k2_factor < 1)
      throw ConfigError("selection: need k1_factor >= k2_factor >= 1");
  }

  cfg.seed = j.value("seed", std::uint64_t{1});
  if (j.contains("per_strategy_seeds")) {
    for (const auto& [name, seed] : j["per_strategy_seeds"].items())
      cfg.per_strategy_seeds[name] = seed.get<std::uint64_t>();
  }
  cfg.out_dir = j.value("out_dir", std::string("runs/out"));
  return cfg;
}

RunLock::RunLock(const fs::path& dir) : path_(dir / ".lock") {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (fs::exists(path_))
    throw DataError("run directory is locked by another process: " + path_.string());
  std::ofstream out(path_);
  out << "locked\n";
}

RunLock::~RunLock() {
  std::error_code ec;
  fs::remove(path_, ec);
}

std::vector<LearningCurve> run_experiment(const ExperimentConfig& cfg, bool resume) {
  std::vector<Frame> frames;
  if (cfg.synthetic) {
    frames = generate_dataset(*cfg.synthetic);
  } else {
    frames = load_dataset(*cfg.dataset_dir).frames;
  }

  DatasetSplits splits = split_dataset(frames, cfg.seed);
  Schedule schedule =
      cfg.explicit_sizes.empty()
          ? make_schedule(static_cast<int>(splits.train.size()), cfg.initial_count,
                          cfg.per_round_count, cfg.final_fraction)
          : schedule_from_sizes(cfg.explicit_sizes);

  fs::path out_dir(cfg.out_dir);
  RunLock lock(out_dir);
  fs::create_directories(out_dir / "checkpoints");

  std::vector<LearningCurve> curves;
  for (const std::string& strategy : cfg.strategies) {
    StrategyRunConfig src;
    src.strategy = strategy;
    src.schedule = schedule;
    src.train_strategy = cfg.train_strategy;
    src.master_seed = cfg.seed;
    auto ov = cfg.per_strategy_seeds.find(strategy);
    src.strategy_seed = ov != cfg.per_strategy_seeds.end() ? ov->second : cfg.seed;
    src.eval_cfg = cfg.eval_cfg;
    src.proposal = cfg.proposal;
    src.score = cfg.score;
    src.crb = cfg.crb;
    src.tcrb_window = cfg.tcrb_window;
    src.mc_passes = cfg.mc_passes;
    src.mc_drop_rate = cfg.mc_drop_rate;
    src.base_train = cfg.base_train;

    ActiveLearner learner(&splits, src);

    fs::path metrics_path = out_dir / (strategy + "_metrics.csv");
    fs::path manifest_path = out_dir / (strategy + "_manifest.csv");
    fs::path ckpt_dir = out_dir / "checkpoints" / strategy;
    fs::create_directories(ckpt_dir);

    int completed = 0;
    if (resume && fs::exists(metrics_path)) {
      completed = static_cast<int>(load_metrics_csv(metrics_path).rows.size());
    }
    if (completed > 0) {
      char name[32];
      std::snprintf(name, sizeof(name), "round_%03d", completed - 1);
      RunState state = load_run_state(ckpt_dir / (std::string(name) + "_state.json"));
      ModelState model = load_model(ckpt_dir / (std::string(name) + "_model.json"));
      learner.restore(std::move(state.pool), std::move(model), state.next_round,
                      state.total_visits);
    } else {
      std::ofstream mout(metrics_path);
      std::ofstream fout(manifest_path);
      fout << manifest_header() << "\n";
      // header written lazily on the first row (class count is known then)
    }

    std::ofstream metrics(metrics_path, std::ios::app);
    std::ofstream manifest(manifest_path, std::ios::app);
    bool need_header = completed == 0;

    while (learner.next_round() < schedule.rounds()) {
      auto [row, selection] = learner.run_round();
      if (need_header) {
        metrics << metrics_header(static_cast<int>(row.ap.size())) << "\n";
        need_header = false;
      }
      metrics << metrics_row(strategy, row) << "\n";
      metrics.flush();
      append_manifest_rows(manifest, selection);
      manifest.flush();

      char name[32];
      std::snprintf(name, sizeof(name), "round_%03d", row.round);
      save_model(ckpt_dir / (std::string(name) + "_model.json"), learner.model());
      RunState state;
      state.pool = learner.pool();
      state.next_round = learner.next_round();
      state.total_visits = row.train_steps;
      save_run_state(ckpt_dir / (std::string(name) + "_state.json"), state);
    }
    metrics.close();
    manifest.close();
    curves.push_back(load_metrics_csv(metrics_path));
  }
  return curves;
}

std::string format_delta(double delta) {
  return fmt("%+.2f", delta);
}

namespace {

struct RawCurves {
  std::vector<ReportCurve> curves;                 // shared round axis
  std::vector<int> rounds;                          // aligned round labels
  std::map<std::string, double> asymptotes;
  bool warned = false;
};

RawCurves load_reference_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path.string());
  RawCurves out;
  std::string line;
  if (!std::getline(in, line)) throw DataError(path.string() + ": empty reference CSV");
  std::vector<std::string> header = split_csv_line(line);
  if (header.size() < 3 || header[0] != "round" || header[1] != "percent")
    throw DataError(path.string() + ": reference header must be round,percent,<names...>");
  for (std::size_t c = 2; c < header.size(); ++c)
    out.curves.push_back({header[c], {}, {}});

  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw DataError(path.string() + ": ragged reference row");
    double percent = std::stod(cells[1]);
    if (percent >= 100.0) {  // 100% rows define per-column asymptotes
      for (std::size_t c = 2; c < cells.size(); ++c) {
        if (cells[c].empty() || cells[c] == "-") continue;
        out.asymptotes[header[c]] = std::stod(cells[c]);
      }
      continue;
    }
    out.rounds.push_back(std::stoi(cells[0]));
    for (std::size_t c = 2; c < cells.size(); ++c) {
      ReportCurve& curve = out.curves[c - 2];
      curve.percents.push_back(percent);
      if (cells[c].empty() || cells[c] == "-") {
        curve.values.push_back(std::nan(""));
      } else {
        curve.values.push_back(std::stod(cells[c]));
      }
    }
  }
  return out;
}

RawCurves load_metric_curves(const std::vector<fs::path>& paths) {
  RawCurves out;
  std::vector<LearningCurve> curves;
  for (const fs::path& p : paths) curves.push_back(load_metrics_csv(p));

  // Align on the intersection of round indices.
  std::map<int, int> round_count;
  for (const LearningCurve& c : curves)
    for (const CurveRow& r : c.rows) ++round_count[r.round];
  std::vector<int> shared;
  for (const auto& [round, count] : round_count) {
    if (count == static_cast<int>(curves.size())) shared.push_back(round);
    else out.warned = true;
  }
  if (shared.empty()) throw DataError("report: curves share no rounds");

  out.rounds = shared;
  for (const LearningCurve& c : curves) {
    ReportCurve rc;
    rc.name = c.strategy;
    for (int round : shared) {
      for (const CurveRow& r : c.rows) {
        if (r.round == round) {
          rc.percents.push_back(100.0 * r.labeled_fraction);
          rc.values.push_back(100.0 * r.mAP);  // mAP reported in percent
          break;
        }
      }
    }
    out.curves.push_back(std::move(rc));
  }
  return out;
}

}  // namespace

Report build_report(const std::vector<fs::path>& metrics_csvs,
                    const std::optional<fs::path>& reference_csv) {
  RawCurves raw;
  if (!metrics_csvs.empty()) {
    raw = load_metric_curves(metrics_csvs);
  } else if (reference_csv) {
    raw = load_reference_csv(*reference_csv);
  } else {
    throw ConfigError("report: need at least one metrics CSV or a reference CSV");
  }
  if (metrics_csvs.empty() == false && reference_csv) {
    RawCurves ref = load_reference_csv(*reference_csv);
    raw.asymptotes = ref.asymptotes;
  }

  // Baseline column: "random" when present, else the first curve.
  std::size_t base = 0;
  for (std::size_t i = 0; i < raw.curves.size(); ++i) {
    if (raw.curves[i].name == "random") {
      base = i;
      break;
    }
  }

  std::ostringstream table;
  table << "round  %     ";
  for (std::size_t i = 0; i < raw.curves.size(); ++i) {
    table << "  " << std::setw(i == base || raw.curves.size() == 1 ? 8 : 16)
          << raw.curves[i].name;
  }
  table << "\n";
  for (std::size_t r = 0; r < raw.rounds.size(); ++r) {
    table << std::left << std::setw(7) << raw.rounds[r] << std::right;
    table << std::setw(5) << fmt("%.0f", raw.curves[base].percents[r]);
    for (std::size_t i = 0; i < raw.curves.size(); ++i) {
      double v = raw.curves[i].values[r];
      std::string cell;
      if (std::isnan(v)) {
        cell = "-";
      } else if (i == base || raw.curves.size() == 1 ||
                 std::isnan(raw.curves[base].values[r])) {
        cell = fmt("%.2f", v);
      } else {
        cell = fmt("%.2f", v) + " (" + format_delta(v - raw.curves[base].values[r]) + ")";
      }
      table << "  " << std::setw(i == base || raw.curves.size() == 1 ? 8 : 16) << cell;
    }
    table << "\n";
  }
  for (const auto& [name, value] : raw.asymptotes) {
    table << "100% " << name << ": " << fmt("%.2f", value) << "\n";
  }

  Report report;
  report.table = table.str();
  report.curves = raw.curves;
  report.asymptotes = raw.asymptotes;
  report.warned_disjoint = raw.warned;
  return report;
}

std::string render_report_svg(const Report& report) {
  const double width = 640, height = 420;
  const double x0 = 60, y0 = 370, x1 = 600, y1 = 30;

  double pct_max = 0.0, v_min = 1e300, v_max = -1e300;
  for (const ReportCurve& c : report.curves) {
    for (std::size_t i = 0; i < c.values.size(); ++i) {
      if (std::isnan(c.values[i])) continue;
      pct_max = std::max(pct_max, c.percents[i]);
      v_min = std::min(v_min, c.values[i]);
      v_max = std::max(v_max, c.values[i]);
    }
  }
  for (const auto& [name, v] : report.asymptotes) {
    v_min = std::min(v_min, v);
    v_max = std::max(v_max, v);
  }
  if (v_min > v_max) { v_min = 0.0; v_max = 1.0; }
  if (v_max == v_min) v_max = v_min + 1.0;
  pct_max = std::max(pct_max, 1.0);
  double pad = 0.05 * (v_max - v_min);
  v_min -= pad;
  v_max += pad;

  auto sx = [&](double pct) { return x0 + (x1 - x0) * pct / pct_max; };
  auto sy = [&](double v) { return y0 + (y1 - y0) * (v - v_min) / (v_max - v_min); };

  static const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                 "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x1 << "\" y2=\"" << y0
      << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x0 << "\" y2=\"" << y1
      << "\" stroke=\"black\"/>\n";
  svg << "<text x=\"" << (x0 + x1) / 2 << "\" y=\"" << height - 10
      << "\" text-anchor=\"middle\" font-size=\"12\">labeled pool (%)</text>\n";
  svg << "<text x=\"15\" y=\"" << (y0 + y1) / 2
      << "\" font-size=\"12\" transform=\"rotate(-90 15 " << (y0 + y1) / 2
      << ")\" text-anchor=\"middle\">mAP</text>\n";

  int ci = 0;
  for (const ReportCurve& c : report.curves) {
    std::ostringstream pts;
    for (std::size_t i = 0; i < c.values.size(); ++i) {
      if (std::isnan(c.values[i])) continue;
      pts << sx(c.percents[i]) << "," << sy(c.values[i]) << " ";
    }
    const char* color = colors[ci % 8];
    svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\""
        << pts.str() << "\"/>\n";
    svg << "<text x=\"" << x1 - 120 << "\" y=\"" << y1 + 15 + 15 * ci
        << "\" font-size=\"12\" fill=\"" << color << "\">" << c.name << "</text>\n";
    ++ci;
  }
  for (const auto& [name, v] : report.asymptotes) {
    svg << "<line x1=\"" << x0 << "\" y1=\"" << sy(v) << "\" x2=\"" << x1 << "\" y2=\""
        << sy(v) << "\" stroke=\"#555\" stroke-dasharray=\"6 4\"/>\n";
    svg << "<text x=\"" << x0 + 5 << "\" y=\"" << sy(v) - 4 << "\" font-size=\"11\" fill=\"#555\">"
        << name << " 100% = " << fmt("%.2f", v) << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace activeloop
