#include "a3fr/scene.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "a3fr/splat.hpp"
#include "json.hpp"

namespace a3fr {

namespace {

constexpr float kSH_C0 = 0.28209479177387814f;
constexpr float kSH_C1 = 0.4886025119029199f;
constexpr float kSH_C2[5] = {1.0925484305920792f, -1.0925484305920792f,
                             0.31539156525252005f, -1.0925484305920792f,
                             0.5462742152960396f};
constexpr float kSH_C3[7] = {-0.5900435899266435f, 2.890611442640554f,
                             -0.4570457994644658f, 0.3731763325901154f,
                             -0.4570457994644658f, 1.445305721320277f,
                             -0.5900435899266435f};

float logistic(float x) { return 1.0f / (1.0f + std::exp(-x)); }
float logit(float p) { return std::log(p / (1.0f - p)); }

int rest_coeffs_to_degree(std::size_t rest_per_channel) {
  switch (rest_per_channel) {
    case 0: return 0;
    case 3: return 1;
    case 8: return 2;
    case 15: return 3;
    default: return -1;
  }
}

}  // namespace

int Gaussian3D::sh_degree() const {
  const auto coeffs = sh.size() / 3;
  for (int d = 0; d <= 3; ++d)
    if (coeffs == std::size_t((d + 1) * (d + 1))) return d;
  throw ConfigError("Gaussian3D: invalid SH coefficient count " +
                    std::to_string(sh.size()));
}

Eigen::Matrix3f Gaussian3D::covariance() const {
  const Eigen::Matrix3f r = rotation.toRotationMatrix();
  return r * scale.array().square().matrix().asDiagonal() * r.transpose();
}

void Camera::validate() const {
  if (width <= 0 || height <= 0)
    throw ConfigError("camera: non-positive image size");
  if (width % kPixelAlign != 0 || height % kPixelAlign != 0)
    throw ConfigError("camera: image size " + std::to_string(width) + "x" +
                      std::to_string(height) + " not divisible by " +
                      std::to_string(kPixelAlign) + " (tile/block alignment)");
  if (fx <= 0 || fy <= 0) throw ConfigError("camera: non-positive focal length");
  const double expected = width / (2.0 * fx);
  const double actual = std::tan(fov_deg * M_PI / 360.0);
  if (std::abs(expected - actual) > 1e-6 * std::max(1.0, std::abs(expected)))
    throw ConfigError("camera: fov " + std::to_string(fov_deg) +
                      " inconsistent with focal fx=" + std::to_string(fx));
}

Eigen::Vector3f Camera::camera_center() const {
  return -(rotation().transpose() * translation());
}

Camera Camera::make(const Eigen::Matrix4f& w2c, float fx, float fy, float cx,
                    float cy, int width, int height) {
  Camera cam;
  cam.world_to_camera = w2c;
  cam.fx = fx;
  cam.fy = fy;
  cam.cx = cx;
  cam.cy = cy;
  cam.width = width;
  cam.height = height;
  cam.fov_deg = float(2.0 * std::atan(width / (2.0 * fx)) * 180.0 / M_PI);
  cam.validate();
  return cam;
}

Camera Camera::from_fov(const Eigen::Matrix4f& w2c, float fov_deg, int width,
                        int height) {
  const float fx = float(width / (2.0 * std::tan(fov_deg * M_PI / 360.0)));
  return make(w2c, fx, fx, width / 2.0f, height / 2.0f, width, height);
}

void Scene::recompute_bbox() {
  bbox.setEmpty();
  for (const auto& g : gaussians) bbox.extend(g.mean);
}

void Scene::validate() const {
  if (gaussians.empty()) throw FormatError("scene '" + name + "' is empty");
  for (const auto& g : gaussians)
    if (!bbox.contains(g.mean)) throw ConfigError("scene bbox stale");
}

// ---------------------------------------------------------------------------
// PLY ingestion

namespace {

struct PlyHeader {
  bool ascii = false;
  std::size_t count = 0;
  std::vector<std::string> properties;
  std::size_t data_offset = 0;
};

PlyHeader parse_ply_header(std::istream& in, const std::string& path) {
  PlyHeader h;
  std::string line;
  if (!std::getline(in, line) || line.substr(0, 3) != "ply")
    throw FormatError(path + ": not a PLY file");
  bool have_format = false, in_vertex = false, done = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string tok;
    ls >> tok;
    if (tok == "comment") continue;
    if (tok == "format") {
      std::string fmt;
      ls >> fmt;
      if (fmt == "ascii") h.ascii = true;
      else if (fmt != "binary_little_endian")
        throw FormatError(path + ": unsupported PLY format '" + fmt + "'");
      have_format = true;
    } else if (tok == "element") {
      std::string name;
      std::size_t n;
      ls >> name >> n;
      if (name == "vertex") {
        h.count = n;
        in_vertex = true;
      } else {
        in_vertex = false;
      }
    } else if (tok == "property") {
      std::string type, name;
      ls >> type >> name;
      if (!in_vertex) continue;
      if (type != "float" && type != "float32")
        throw FormatError(path + ": unsupported property type '" + type + "'");
      h.properties.push_back(name);
    } else if (tok == "end_header") {
      done = true;
      break;
    }
  }
  if (!done || !have_format) throw FormatError(path + ": truncated PLY header");
  h.data_offset = std::size_t(in.tellg());
  return h;
}

int find_property(const PlyHeader& h, const std::string& name) {
  auto it = std::find(h.properties.begin(), h.properties.end(), name);
  return it == h.properties.end() ? -1 : int(it - h.properties.begin());
}

int require_property(const PlyHeader& h, const std::string& name,
                     const std::string& path) {
  const int idx = find_property(h, name);
  if (idx < 0) throw FormatError(path + ": missing field '" + name + "'");
  return idx;
}

}  // namespace

Scene load_scene(const std::filesystem::path& path, int sh_degree_limit,
                 LoadStats* stats) {
  if (!std::filesystem::exists(path))
    throw FormatError(path.string() + ": no such file");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(path.string() + ": cannot open");
  const std::string pstr = path.string();

  const PlyHeader h = parse_ply_header(in, pstr);
  if (h.count == 0) throw FormatError(pstr + ": empty scene (zero points)");

  const int ix = require_property(h, "x", pstr);
  const int iy = require_property(h, "y", pstr);
  const int iz = require_property(h, "z", pstr);
  const int iop = require_property(h, "opacity", pstr);
  int iscale[3], irot[4], idc[3];
  for (int k = 0; k < 3; ++k)
    iscale[k] = require_property(h, "scale_" + std::to_string(k), pstr);
  for (int k = 0; k < 4; ++k)
    irot[k] = require_property(h, "rot_" + std::to_string(k), pstr);
  for (int k = 0; k < 3; ++k)
    idc[k] = require_property(h, "f_dc_" + std::to_string(k), pstr);

  std::vector<int> irest;
  for (int k = 0;; ++k) {
    const int idx = find_property(h, "f_rest_" + std::to_string(k));
    if (idx < 0) break;
    irest.push_back(idx);
  }
  if (irest.size() % 3 != 0)
    throw FormatError(pstr + ": f_rest count not divisible by 3");
  const std::size_t rest_per_channel = irest.size() / 3;
  const int file_degree = rest_coeffs_to_degree(rest_per_channel);
  if (file_degree < 0)
    throw FormatError(pstr + ": f_rest count " + std::to_string(irest.size()) +
                      " matches no SH degree in 0..3");
  const int degree = std::min(file_degree, std::clamp(sh_degree_limit, 0, 3));
  const std::size_t kept_coeffs = std::size_t((degree + 1) * (degree + 1));

  const std::size_t n_props = h.properties.size();
  std::vector<float> row(n_props);

  Scene scene;
  scene.name = path.stem().string();
  scene.gaussians.reserve(h.count);

  for (std::size_t p = 0; p < h.count; ++p) {
    if (h.ascii) {
      for (std::size_t k = 0; k < n_props; ++k)
        if (!(in >> row[k]))
          throw FormatError(pstr + ": truncated at point " + std::to_string(p));
    } else {
      in.read(reinterpret_cast<char*>(row.data()),
              std::streamsize(n_props * sizeof(float)));
      if (!in)
        throw FormatError(pstr + ": truncated at point " + std::to_string(p));
    }
    for (std::size_t k = 0; k < n_props; ++k)
      if (!std::isfinite(row[k]))
        throw FormatError(pstr + ": non-finite value in field '" +
                          h.properties[k] + "' at point " + std::to_string(p));

    Gaussian3D g;
    g.mean = {row[ix], row[iy], row[iz]};
    g.opacity = logistic(row[iop]);
    g.scale = {std::exp(row[iscale[0]]), std::exp(row[iscale[1]]),
               std::exp(row[iscale[2]])};
    g.rotation = Eigen::Quaternionf(row[irot[0]], row[irot[1]], row[irot[2]],
                                    row[irot[3]]);
    if (g.rotation.norm() < 1e-8f)
      throw FormatError(pstr + ": zero quaternion at point " + std::to_string(p));
    g.rotation.normalize();

    g.sh.assign(kept_coeffs * 3, 0.0f);
    for (int ch = 0; ch < 3; ++ch) g.sh[ch] = row[idc[ch]];
    for (std::size_t c = 1; c < kept_coeffs; ++c)
      for (int ch = 0; ch < 3; ++ch)
        g.sh[3 * c + ch] = row[irest[ch * rest_per_channel + (c - 1)]];

    scene.gaussians.push_back(std::move(g));
  }
  scene.recompute_bbox();
  if (stats) {
    stats->points = scene.gaussians.size();
    stats->sh_degree = degree;
  }
  return scene;
}

void write_scene(const std::filesystem::path& path, const Scene& scene,
                 bool ascii) {
  if (scene.gaussians.empty())
    throw FormatError("write_scene: refusing to write empty scene");
  const int degree = scene.gaussians.front().sh_degree();
  const std::size_t coeffs = std::size_t((degree + 1) * (degree + 1));
  const std::size_t rest_per_channel = coeffs - 1;

  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError(path.string() + ": cannot open for writing");

  out << "ply\nformat " << (ascii ? "ascii" : "binary_little_endian")
      << " 1.0\nelement vertex " << scene.gaussians.size() << "\n";
  auto prop = [&](const std::string& n) { out << "property float " << n << "\n"; };
  for (const char* n : {"x", "y", "z"}) prop(n);
  for (int k = 0; k < 3; ++k) prop("f_dc_" + std::to_string(k));
  for (std::size_t k = 0; k < rest_per_channel * 3; ++k)
    prop("f_rest_" + std::to_string(k));
  prop("opacity");
  for (int k = 0; k < 3; ++k) prop("scale_" + std::to_string(k));
  for (int k = 0; k < 4; ++k) prop("rot_" + std::to_string(k));
  out << "end_header\n";
  // Shortest float representation that round-trips exactly through text.
  out << std::setprecision(std::numeric_limits<float>::max_digits10);

  std::vector<float> row;
  for (const auto& g : scene.gaussians) {
    if (g.sh.size() != coeffs * 3)
      throw FormatError("write_scene: mixed SH degrees");
    row.clear();
    row.insert(row.end(), {g.mean.x(), g.mean.y(), g.mean.z()});
    for (int ch = 0; ch < 3; ++ch) row.push_back(g.sh[ch]);
    for (int ch = 0; ch < 3; ++ch)
      for (std::size_t c = 1; c < coeffs; ++c) row.push_back(g.sh[3 * c + ch]);
    row.push_back(logit(std::min(g.opacity, 1.0f - 1e-7f)));
    for (int k = 0; k < 3; ++k) row.push_back(std::log(g.scale[k]));
    row.insert(row.end(), {g.rotation.w(), g.rotation.x(), g.rotation.y(),
                           g.rotation.z()});
    if (ascii) {
      for (std::size_t k = 0; k < row.size(); ++k)
        out << (k ? " " : "") << row[k];
      out << "\n";
    } else {
      out.write(reinterpret_cast<const char*>(row.data()),
                std::streamsize(row.size() * sizeof(float)));
    }
  }
}

// ---------------------------------------------------------------------------
// Poses

std::vector<Camera> load_poses(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError(path.string() + ": cannot open");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": invalid JSON: " + e.what());
  }
  if (!j.is_array()) throw FormatError(path.string() + ": expected a JSON array");

  std::vector<Camera> cams;
  cams.reserve(j.size());
  for (const auto& e : j) {
    const auto& m = e.at("world_to_camera");
    if (!m.is_array() || m.size() != 16)
      throw FormatError(path.string() + ": world_to_camera must be 16 floats");
    Eigen::Matrix4f w2c;
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c) w2c(r, c) = m[4 * r + c].get<float>();
    cams.push_back(Camera::make(w2c, e.at("fx").get<float>(),
                                e.at("fy").get<float>(), e.at("cx").get<float>(),
                                e.at("cy").get<float>(), e.at("W").get<int>(),
                                e.at("H").get<int>()));
  }
  return cams;
}

void write_poses(const std::filesystem::path& path,
                 const std::vector<Camera>& cams) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& cam : cams) {
    std::vector<float> m(16);
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c) m[4 * r + c] = cam.world_to_camera(r, c);
    j.push_back({{"world_to_camera", m},
                 {"fx", cam.fx},
                 {"fy", cam.fy},
                 {"cx", cam.cx},
                 {"cy", cam.cy},
                 {"W", cam.width},
                 {"H", cam.height}});
  }
  std::ofstream out(path);
  out << j.dump(1) << "\n";
}

// ---------------------------------------------------------------------------
// Spherical harmonics

Eigen::Vector3f evaluate_sh(const Gaussian3D& g, const Eigen::Vector3f& dir) {
  const int degree = g.sh_degree();
  auto coeff = [&](int c) {
    return Eigen::Vector3f(g.sh[3 * c], g.sh[3 * c + 1], g.sh[3 * c + 2]);
  };

  Eigen::Vector3f result = kSH_C0 * coeff(0);
  if (degree >= 1) {
    const float x = dir.x(), y = dir.y(), z = dir.z();
    result += -kSH_C1 * y * coeff(1) + kSH_C1 * z * coeff(2) -
              kSH_C1 * x * coeff(3);
    if (degree >= 2) {
      const float xx = x * x, yy = y * y, zz = z * z;
      const float xy = x * y, yz = y * z, xz = x * z;
      result += kSH_C2[0] * xy * coeff(4) + kSH_C2[1] * yz * coeff(5) +
                kSH_C2[2] * (2.0f * zz - xx - yy) * coeff(6) +
                kSH_C2[3] * xz * coeff(7) + kSH_C2[4] * (xx - yy) * coeff(8);
      if (degree >= 3) {
        result += kSH_C3[0] * y * (3.0f * xx - yy) * coeff(9) +
                  kSH_C3[1] * xy * z * coeff(10) +
                  kSH_C3[2] * y * (4.0f * zz - xx - yy) * coeff(11) +
                  kSH_C3[3] * z * (2.0f * zz - 3.0f * xx - 3.0f * yy) * coeff(12) +
                  kSH_C3[4] * x * (4.0f * zz - xx - yy) * coeff(13) +
                  kSH_C3[5] * z * (xx - yy) * coeff(14) +
                  kSH_C3[6] * x * (xx - 3.0f * yy) * coeff(15);
      }
    }
  }
  result.array() += 0.5f;
  return result.cwiseMax(0.0f).cwiseMin(1.0f);
}

}  // namespace a3fr
