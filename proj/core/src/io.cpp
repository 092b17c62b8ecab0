#include "posekit/io.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "posekit/error.hpp"

namespace posekit {

namespace {

using ordered_json = nlohmann::ordered_json;

std::ofstream open_out(const std::string& path, std::ios::openmode mode) {
  std::ofstream out(path, mode);
  if (!out)
    throw ConfigError("cannot open for writing: " + path);
  return out;
}

std::ifstream open_in(const std::string& path, std::ios::openmode mode) {
  std::ifstream in(path, mode);
  if (!in)
    throw ConfigError("cannot open for reading: " + path);
  return in;
}

static_assert(std::endian::native == std::endian::little,
              "binary formats assume a little-endian host");

void write_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint32_t read_u32(std::istream& in) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

ordered_json vec3_json(const Eigen::Vector3d& v) {
  return ordered_json::array(
      {format_g17(v.x()), format_g17(v.y()), format_g17(v.z())});
}

Eigen::Vector3d vec3_from(const ordered_json& j) {
  return {parse_double(j.at(0).get<std::string>()),
          parse_double(j.at(1).get<std::string>()),
          parse_double(j.at(2).get<std::string>())};
}

void write_matrix(std::ostream& out, const Eigen::MatrixXd& m) {
  write_u32(out, static_cast<std::uint32_t>(m.rows()));
  write_u32(out, static_cast<std::uint32_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      const double v = m(i, j);
      out.write(reinterpret_cast<const char*>(&v), sizeof(v));
    }
}

Eigen::MatrixXd read_matrix(std::istream& in) {
  const std::uint32_t rows = read_u32(in);
  const std::uint32_t cols = read_u32(in);
  if (!in || rows > 1u << 24 || cols > 1u << 24)
    throw ValidationError("checkpoint: corrupt matrix header");
  Eigen::MatrixXd m(rows, cols);
  for (std::uint32_t i = 0; i < rows; ++i)
    for (std::uint32_t j = 0; j < cols; ++j) {
      double v = 0;
      in.read(reinterpret_cast<char*>(&v), sizeof(v));
      m(i, j) = v;
    }
  if (!in)
    throw ValidationError("checkpoint: truncated matrix data");
  return m;
}

}  // namespace

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_double(const std::string& s) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size())
      throw ValidationError("trailing characters in number: " + s);
    return v;
  } catch (const std::logic_error&) {
    throw ValidationError("not a number: " + s);
  }
}

void save_d16(const std::string& path, const DepthImage& depth) {
  auto out = open_out(path, std::ios::binary);
  write_u32(out, static_cast<std::uint32_t>(depth.width));
  write_u32(out, static_cast<std::uint32_t>(depth.height));
  for (double d : depth.meters) {
    const long mm = std::lround(std::max(0.0, d) * 1000.0);
    const std::uint16_t q =
        static_cast<std::uint16_t>(std::min<long>(mm, 65535));
    out.write(reinterpret_cast<const char*>(&q), sizeof(q));
  }
}

DepthImage load_d16(const std::string& path) {
  auto in = open_in(path, std::ios::binary);
  DepthImage depth;
  depth.width = static_cast<int>(read_u32(in));
  depth.height = static_cast<int>(read_u32(in));
  if (!in || depth.width <= 0 || depth.height <= 0 ||
      depth.width > 1 << 16 || depth.height > 1 << 16)
    throw ValidationError("d16: corrupt header in " + path);
  const std::size_t n = static_cast<std::size_t>(depth.width) * depth.height;
  depth.meters.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::uint16_t q = 0;
    in.read(reinterpret_cast<char*>(&q), sizeof(q));
    depth.meters[i] = q / 1000.0;
  }
  if (!in)
    throw ValidationError("d16: truncated data in " + path);
  return depth;
}

void save_model_json(const std::string& path, const ObjectModel& model) {
  ordered_json j;
  j["format_version"] = 1;
  j["class_id"] = model.class_id;
  j["symmetric"] = model.symmetric;
  j["diameter"] = format_g17(model.diameter);
  auto verts = ordered_json::array();
  for (const auto& v : model.vertices) verts.push_back(vec3_json(v));
  j["vertices"] = std::move(verts);
  auto eps = ordered_json::array();
  for (const auto& e : model.edge_points) eps.push_back(vec3_json(e));
  j["edge_points"] = std::move(eps);
  auto out = open_out(path, std::ios::out);
  out << j.dump(1) << "\n";
}

ObjectModel load_model_json(const std::string& path) {
  auto in = open_in(path, std::ios::in);
  ordered_json j;
  try {
    in >> j;
    ObjectModel model;
    model.class_id = j.at("class_id").get<int>();
    model.symmetric = j.at("symmetric").get<bool>();
    model.diameter = parse_double(j.at("diameter").get<std::string>());
    for (const auto& v : j.at("vertices")) model.vertices.push_back(vec3_from(v));
    for (const auto& e : j.at("edge_points"))
      model.edge_points.push_back(vec3_from(e));
    model.validate();
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("model json " + path + ": " + e.what());
  }
}

void save_scene_json(const std::string& path, const SceneSample& scene,
                     const std::vector<std::string>& model_paths) {
  ordered_json j;
  j["format_version"] = 1;
  j["intrinsics"] = {{"fx", format_g17(scene.intrinsics.fx)},
                     {"fy", format_g17(scene.intrinsics.fy)},
                     {"cx", format_g17(scene.intrinsics.cx)},
                     {"cy", format_g17(scene.intrinsics.cy)},
                     {"width", scene.intrinsics.width},
                     {"height", scene.intrinsics.height}};
  j["models"] = model_paths;
  auto instances = ordered_json::array();
  for (const auto& inst : scene.instances) {
    ordered_json ji;
    ji["instance_id"] = inst.instance_id;
    ji["class_id"] = inst.class_id;
    ji["model"] = inst.model_index;
    auto pose = ordered_json::array();
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c)
        pose.push_back(format_g17(inst.pose.rotation(r, c)));
    for (int r = 0; r < 3; ++r)
      pose.push_back(format_g17(inst.pose.translation(r)));
    ji["pose"] = std::move(pose);
    instances.push_back(std::move(ji));
  }
  j["instances"] = std::move(instances);
  auto points = ordered_json::array();
  for (int i = 0; i < scene.num_points(); ++i) {
    ordered_json jp;
    jp["xyz"] = vec3_json(scene.cloud.points[i]);
    if (scene.cloud.has_pixels())
      jp["pixel"] = {scene.cloud.source_pixel[i].x(),
                     scene.cloud.source_pixel[i].y()};
    jp["class"] = scene.class_label[i];
    jp["instance"] = scene.instance_label[i];
    jp["color"] = vec3_json(scene.color.row(i).transpose());
    points.push_back(std::move(jp));
  }
  j["points"] = std::move(points);
  auto out = open_out(path, std::ios::out);
  out << j.dump(1) << "\n";
}

SceneSample load_scene_json(const std::string& path,
                            std::vector<ObjectModel>* models_out) {
  auto in = open_in(path, std::ios::in);
  ordered_json j;
  SceneSample scene;
  std::vector<ObjectModel> models;
  try {
    in >> j;
    if (j.at("format_version").get<int>() != 1)
      throw ValidationError("scene json: unsupported format_version");
    const auto& ji = j.at("intrinsics");
    scene.intrinsics.fx = parse_double(ji.at("fx").get<std::string>());
    scene.intrinsics.fy = parse_double(ji.at("fy").get<std::string>());
    scene.intrinsics.cx = parse_double(ji.at("cx").get<std::string>());
    scene.intrinsics.cy = parse_double(ji.at("cy").get<std::string>());
    scene.intrinsics.width = ji.at("width").get<int>();
    scene.intrinsics.height = ji.at("height").get<int>();

    const auto dir = std::filesystem::path(path).parent_path();
    for (const auto& mp : j.at("models")) {
      const std::filesystem::path p(mp.get<std::string>());
      models.push_back(
          load_model_json(p.is_absolute() ? p.string() : (dir / p).string()));
    }
    for (const auto& jinst : j.at("instances")) {
      InstanceGt inst;
      inst.instance_id = jinst.at("instance_id").get<int>();
      inst.class_id = jinst.at("class_id").get<int>();
      inst.model_index = jinst.at("model").get<int>();
      if (inst.model_index < 0 ||
          inst.model_index >= static_cast<int>(models.size()))
        throw ValidationError("scene json: instance references missing model");
      const auto& pose = jinst.at("pose");
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c)
          inst.pose.rotation(r, c) =
              parse_double(pose.at(3 * r + c).get<std::string>());
      for (int r = 0; r < 3; ++r)
        inst.pose.translation(r) = parse_double(pose.at(9 + r).get<std::string>());
      scene.instances.push_back(inst);
    }

    const auto& points = j.at("points");
    const int n = static_cast<int>(points.size());
    const int m =
        models.empty() ? 0 : static_cast<int>(models[0].edge_points.size());
    scene.class_label.resize(n);
    scene.instance_label.resize(n);
    scene.color.resize(n, 3);
    scene.gt_edge_offsets = Eigen::MatrixXd::Zero(n, 3 * m);
    scene.gt_center_offset = Eigen::MatrixXd::Zero(n, 3);
    bool any_pixels = n > 0 && points.at(0).contains("pixel");
    for (int i = 0; i < n; ++i) {
      const auto& jp = points.at(i);
      scene.cloud.points.push_back(vec3_from(jp.at("xyz")));
      if (any_pixels)
        scene.cloud.source_pixel.emplace_back(jp.at("pixel").at(0).get<int>(),
                                              jp.at("pixel").at(1).get<int>());
      scene.class_label[i] = jp.at("class").get<int>();
      scene.instance_label[i] = jp.at("instance").get<int>();
      scene.color.row(i) = vec3_from(jp.at("color")).transpose();
    }

    // ground-truth offsets are derived data; rebuild them from poses
    for (int i = 0; i < n; ++i) {
      const int inst_id = scene.instance_label[i];
      if (inst_id < 0) continue;
      const InstanceGt* inst = nullptr;
      for (const auto& cand : scene.instances)
        if (cand.instance_id == inst_id) inst = &cand;
      if (!inst)
        throw ValidationError("scene json: point references missing instance");
      const ObjectModel& model = models[inst->model_index];
      for (int e = 0; e < m; ++e) {
        const Eigen::Vector3d target = inst->pose.apply(model.edge_points[e]);
        scene.gt_edge_offsets.row(i).segment<3>(3 * e) =
            (target - scene.cloud.points[i]).transpose();
      }
      scene.gt_center_offset.row(i) =
          (inst->pose.apply(model.centroid()) - scene.cloud.points[i])
              .transpose();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("scene json " + path + ": " + e.what());
  }
  if (models_out) *models_out = std::move(models);
  return scene;
}

void save_checkpoint(const std::string& path, const MlpModel& model) {
  auto out = open_out(path, std::ios::binary);
  out.write("PKNET001", 8);
  write_u32(out, static_cast<std::uint32_t>(model.feature_dim()));
  write_u32(out, static_cast<std::uint32_t>(model.hidden_dim()));
  write_u32(out, static_cast<std::uint32_t>(model.num_classes()));
  write_u32(out, static_cast<std::uint32_t>(model.num_edge_points()));
  write_matrix(out, model.w1);
  write_matrix(out, model.b1);
  write_matrix(out, model.w2);
  write_matrix(out, model.b2);
  write_matrix(out, model.w_sem);
  write_matrix(out, model.b_sem);
  write_matrix(out, model.w_edge);
  write_matrix(out, model.b_edge);
  write_matrix(out, model.w_center);
  write_matrix(out, model.b_center);
  write_matrix(out, model.feat_mean);
  write_matrix(out, model.feat_std);
}

MlpModel load_checkpoint(const std::string& path) {
  auto in = open_in(path, std::ios::binary);
  char magic[8] = {};
  in.read(magic, 8);
  if (!in || std::memcmp(magic, "PKNET001", 8) != 0)
    throw ValidationError("checkpoint: bad magic in " + path);
  const std::uint32_t feat = read_u32(in);
  const std::uint32_t hidden = read_u32(in);
  const std::uint32_t classes = read_u32(in);
  const std::uint32_t m = read_u32(in);
  MlpModel model;
  model.w1 = read_matrix(in);
  model.b1 = read_matrix(in);
  model.w2 = read_matrix(in);
  model.b2 = read_matrix(in);
  model.w_sem = read_matrix(in);
  model.b_sem = read_matrix(in);
  model.w_edge = read_matrix(in);
  model.b_edge = read_matrix(in);
  model.w_center = read_matrix(in);
  model.b_center = read_matrix(in);
  model.feat_mean = read_matrix(in);
  model.feat_std = read_matrix(in);
  if (model.feature_dim() != static_cast<int>(feat) ||
      model.hidden_dim() != static_cast<int>(hidden) ||
      model.num_classes() != static_cast<int>(classes) ||
      model.num_edge_points() != static_cast<int>(m))
    throw ValidationError("checkpoint: header/matrix dimension mismatch");
  return model;
}

void save_loss_history_csv(const std::string& path,
                           const std::vector<double>& history) {
  auto out = open_out(path, std::ios::out);
  out << "epoch,loss\n";
  for (std::size_t i = 0; i < history.size(); ++i)
    out << (i + 1) << "," << format_g17(history[i]) << "\n";
}

void save_pose_csv(const std::string& path, const std::vector<PoseRecord>& rows) {
  auto out = open_out(path, std::ios::out);
  out << "scene_id,instance_id,class_id,r00,r01,r02,r10,r11,r12,r20,r21,r22,"
         "tx,ty,tz\n";
  for (const auto& row : rows) {
    out << row.scene_id << "," << row.instance_id << "," << row.class_id;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) out << "," << format_g17(row.pose.rotation(r, c));
    for (int r = 0; r < 3; ++r) out << "," << format_g17(row.pose.translation(r));
    out << "\n";
  }
}

std::vector<PoseRecord> load_pose_csv(const std::string& path) {
  auto in = open_in(path, std::ios::in);
  std::string line;
  if (!std::getline(in, line))
    throw ValidationError("pose csv: empty file " + path);
  std::vector<PoseRecord> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 15)
      throw ValidationError("pose csv: malformed row in " + path);
    PoseRecord row;
    row.scene_id = static_cast<int>(parse_double(fields[0]));
    row.instance_id = static_cast<int>(parse_double(fields[1]));
    row.class_id = static_cast<int>(parse_double(fields[2]));
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c)
        row.pose.rotation(r, c) = parse_double(fields[3 + 3 * r + c]);
    for (int r = 0; r < 3; ++r)
      row.pose.translation(r) = parse_double(fields[12 + r]);
    rows.push_back(row);
  }
  return rows;
}

void save_eval_csv(const std::string& path, const EvalReport& report) {
  auto out = open_out(path, std::ios::out);
  out << "class_id,adds_auc,add_s_auc,add01d_rate,kp_err_m\n";
  const auto row = [&](const std::string& id, const PerClassMetrics& m) {
    out << id << "," << format_g17(m.adds_auc) << "," << format_g17(m.add_s_auc)
        << "," << format_g17(m.add01d_rate) << "," << format_g17(m.kp_err_m)
        << "\n";
  };
  for (const auto& m : report.per_class) row(std::to_string(m.class_id), m);
  row("ALL", report.all);
}

void save_timing_csv(const std::string& path, const TimingBreakdown& timing) {
  auto out = open_out(path, std::ios::out);
  out << "stage,ms_per_frame\n";
  out << "prediction," << format_g17(timing.prediction_ms) << "\n";
  out << "pose_estimation," << format_g17(timing.pose_estimation_ms) << "\n";
  out << "total," << format_g17(timing.total_ms) << "\n";
}

void save_summary_csv(const std::string& path, const EvalReport& report) {
  auto out = open_out(path, std::ios::out);
  out << "key,value\n";
  out << "miou_pct," << format_g17(report.miou) << "\n";
  out << "classes," << report.per_class.size() << "\n";
}

std::map<std::string, std::string> load_flat_config(const std::string& path) {
  auto in = open_in(path, std::ios::in);
  std::map<std::string, std::string> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    const auto strip = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      if (b == std::string::npos) return std::string();
      const auto e = s.find_last_not_of(" \t\r");
      return s.substr(b, e - b + 1);
    };
    line = strip(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(lineno) +
                        ": expected key=value");
    const std::string key = strip(line.substr(0, eq));
    const std::string value = strip(line.substr(eq + 1));
    if (key.empty())
      throw ConfigError(path + ":" + std::to_string(lineno) + ": empty key");
    out[key] = value;
  }
  return out;
}

}  // namespace posekit
