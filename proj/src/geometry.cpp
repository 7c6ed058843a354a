#include "c3r/geometry.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "c3r/errors.hpp"
#include "c3r/io.hpp"

namespace c3r {

Vec3 operator+(const Vec3& a, const Vec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
Vec3 operator-(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
Vec3 operator*(double s, const Vec3& a) { return {s * a[0], s * a[1], s * a[2]}; }
double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}
double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

Quat Quat::from_axis_angle(const Vec3& axis_angle) {
  const double theta = norm(axis_angle);
  if (theta < 1e-12) {
    // first-order expansion keeps tiny rotations exact to machine precision
    Quat q{1.0, 0.5 * axis_angle[0], 0.5 * axis_angle[1], 0.5 * axis_angle[2]};
    return q.normalized();
  }
  const double half = 0.5 * theta;
  const double s = std::sin(half) / theta;
  return {std::cos(half), s * axis_angle[0], s * axis_angle[1], s * axis_angle[2]};
}

Quat Quat::normalized() const {
  const double n = std::sqrt(w * w + x * x + y * y + z * z);
  return {w / n, x / n, y / n, z / n};
}

Mat3 Quat::to_matrix() const {
  const double xx = x * x, yy = y * y, zz = z * z;
  const double wx = w * x, wy = w * y, wz = w * z;
  const double xy = x * y, xz = x * z, yz = y * z;
  return {{{1 - 2 * (yy + zz), 2 * (xy - wz), 2 * (xz + wy)},
           {2 * (xy + wz), 1 - 2 * (xx + zz), 2 * (yz - wx)},
           {2 * (xz - wy), 2 * (yz + wx), 1 - 2 * (xx + yy)}}};
}

Vec3 Quat::rotate(const Vec3& v) const {
  const Vec3 u{x, y, z};
  const Vec3 t = 2.0 * cross(u, v);
  return v + w * t + cross(u, t);
}

Vec3 Quat::to_axis_angle() const {
  Quat q = *this;
  if (q.w < 0) q = {-q.w, -q.x, -q.y, -q.z};
  const double vn = std::sqrt(q.x * q.x + q.y * q.y + q.z * q.z);
  const double theta = 2.0 * std::atan2(vn, q.w);
  if (vn < 1e-12) return {2.0 * q.x, 2.0 * q.y, 2.0 * q.z};
  const double s = theta / vn;
  return {s * q.x, s * q.y, s * q.z};
}

double Quat::angle() const {
  const double vn = std::sqrt(x * x + y * y + z * z);
  return 2.0 * std::atan2(vn, std::abs(w));
}

Quat operator*(const Quat& a, const Quat& b) {
  return {a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
          a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
          a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
          a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w};
}

Quat slerp(const Quat& a, const Quat& b, double t) {
  double cosw = a.w * b.w + a.x * b.x + a.y * b.y + a.z * b.z;
  Quat bb = b;
  if (cosw < 0) {
    cosw = -cosw;
    bb = {-b.w, -b.x, -b.y, -b.z};
  }
  if (cosw > 1.0 - 1e-10) {
    Quat q{a.w + t * (bb.w - a.w), a.x + t * (bb.x - a.x), a.y + t * (bb.y - a.y),
           a.z + t * (bb.z - a.z)};
    return q.normalized();
  }
  const double omega = std::acos(cosw);
  const double sa = std::sin((1.0 - t) * omega) / std::sin(omega);
  const double sb = std::sin(t * omega) / std::sin(omega);
  return Quat{sa * a.w + sb * bb.w, sa * a.x + sb * bb.x, sa * a.y + sb * bb.y,
              sa * a.z + sb * bb.z}
      .normalized();
}

SE3 SE3::inverse() const {
  const Quat qi = q.conjugate();
  return {qi, -1.0 * qi.rotate(t)};
}

Vec3 SE3::apply(const Vec3& p) const { return q.rotate(p) + t; }

SE3 operator*(const SE3& a, const SE3& b) { return {(a.q * b.q).normalized(), a.q.rotate(b.t) + a.t}; }

SE3 se3_exp(const Vec6& xi) {
  const Vec3 rho{xi[0], xi[1], xi[2]};
  const Vec3 omega{xi[3], xi[4], xi[5]};
  const double theta = norm(omega);
  const Quat q = Quat::from_axis_angle(omega);
  // V = I + (1-cos)/t^2 [w]x + (t-sin)/t^3 [w]x^2
  double a, b;
  if (theta < 1e-6) {
    a = 0.5 - theta * theta / 24.0;
    b = 1.0 / 6.0 - theta * theta / 120.0;
  } else {
    a = (1.0 - std::cos(theta)) / (theta * theta);
    b = (theta - std::sin(theta)) / (theta * theta * theta);
  }
  const Vec3 wxr = cross(omega, rho);
  const Vec3 wxwxr = cross(omega, wxr);
  return {q, rho + a * wxr + b * wxwxr};
}

Vec6 se3_log(const SE3& T) {
  const Vec3 omega = T.q.to_axis_angle();
  const double theta = norm(omega);
  double a;
  if (theta < 1e-6) {
    a = 1.0 / 12.0 + theta * theta / 720.0;
  } else {
    const double half = 0.5 * theta;
    a = (1.0 - half * std::cos(half) / std::sin(half)) / (theta * theta);
  }
  const Vec3 wxt = cross(omega, T.t);
  const Vec3 wxwxt = cross(omega, wxt);
  const Vec3 rho = T.t - 0.5 * wxt + a * wxwxt;
  return {rho[0], rho[1], rho[2], omega[0], omega[1], omega[2]};
}

Pointmap Pointmap::allocate(int h, int w, uint32_t tag) {
  Pointmap pm;
  pm.height = h;
  pm.width = w;
  pm.frame_tag = tag;
  pm.xyz.assign(static_cast<size_t>(h) * w * 3, 0.0f);
  pm.valid.assign(static_cast<size_t>(h) * w, 1);
  return pm;
}

ConfidenceMap ConfidenceMap::ones(int h, int w) {
  ConfidenceMap cm;
  cm.height = h;
  cm.width = w;
  cm.c.assign(static_cast<size_t>(h) * w, 1.0f);
  return cm;
}

Pointmap unproject(const std::vector<float>& depth, int h, int w, const CameraIntrinsics& K,
                   uint32_t tag, const std::vector<uint8_t>* valid) {
  if (static_cast<int64_t>(depth.size()) != static_cast<int64_t>(h) * w)
    throw ShapeError("unproject: depth size mismatch");
  Pointmap pm = Pointmap::allocate(h, w, tag);
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      const size_t pix = static_cast<size_t>(v) * w + u;
      const bool ok = !valid || (*valid)[pix];
      pm.valid[pix] = ok ? 1 : 0;
      if (!ok) continue;
      const float d = depth[pix];
      if (!(d > 0.0f))
        throw DataError("unproject: non-positive depth " + std::to_string(d) + " at pixel (" +
                        std::to_string(u) + "," + std::to_string(v) + ")");
      pm.xyz[3 * pix] = static_cast<float>(d * (u - K.cx) / K.f);
      pm.xyz[3 * pix + 1] = static_cast<float>(d * (v - K.cy) / K.f);
      pm.xyz[3 * pix + 2] = d;
    }
  }
  return pm;
}

bool project(const CameraIntrinsics& K, const Vec3& p_cam, double* u, double* v) {
  if (!(p_cam[2] > 0.0)) return false;
  *u = K.f * p_cam[0] / p_cam[2] + K.cx;
  *v = K.f * p_cam[1] / p_cam[2] + K.cy;
  return true;
}

Pointmap transform_pointmap(const Pointmap& pm, const SE3& new_from_old, uint32_t new_tag) {
  Pointmap out = pm;
  out.frame_tag = new_tag;
  const size_t n = pm.pixels();
  for (size_t i = 0; i < n; ++i) {
    if (!pm.valid[i]) continue;
    out.set_point(i, new_from_old.apply(pm.point(i)));
  }
  return out;
}

double norm_factor(const std::vector<const Pointmap*>& pointmaps) {
  double acc = 0.0;
  int64_t count = 0;
  for (const Pointmap* pm : pointmaps) {
    const size_t n = pm->pixels();
    for (size_t i = 0; i < n; ++i) {
      if (!pm->valid[i]) continue;
      acc += norm(pm->point(i));
      ++count;
    }
  }
  if (count == 0) throw DataError("norm_factor: no valid points");
  return acc / static_cast<double>(count);
}

Sim3 umeyama_align(const std::vector<Vec3>& a, const std::vector<Vec3>& b, AlignMode mode) {
  if (a.size() != b.size()) throw ShapeError("umeyama_align: size mismatch");
  const size_t n = a.size();
  if (n < 3) throw DataError("umeyama_align: need at least 3 points, got " + std::to_string(n));

  Eigen::Vector3d mu_a = Eigen::Vector3d::Zero(), mu_b = Eigen::Vector3d::Zero();
  for (size_t i = 0; i < n; ++i) {
    mu_a += Eigen::Vector3d(a[i][0], a[i][1], a[i][2]);
    mu_b += Eigen::Vector3d(b[i][0], b[i][1], b[i][2]);
  }
  mu_a /= static_cast<double>(n);
  mu_b /= static_cast<double>(n);

  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  double var_a = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const Eigen::Vector3d da = Eigen::Vector3d(a[i][0], a[i][1], a[i][2]) - mu_a;
    const Eigen::Vector3d db = Eigen::Vector3d(b[i][0], b[i][1], b[i][2]) - mu_b;
    cov += db * da.transpose();
    var_a += da.squaredNorm();
  }
  cov /= static_cast<double>(n);
  var_a /= static_cast<double>(n);
  if (var_a < 1e-18) throw DataError("umeyama_align: degenerate source configuration");

  Eigen::JacobiSVD<Eigen::Matrix3d> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d S = Eigen::Matrix3d::Identity();
  if (svd.matrixU().determinant() * svd.matrixV().determinant() < 0) S(2, 2) = -1.0;
  const Eigen::Matrix3d R = svd.matrixU() * S * svd.matrixV().transpose();

  double scale = 1.0;
  if (mode == AlignMode::sim3) {
    const double trace_ds = (svd.singularValues().asDiagonal() * S).trace();
    scale = trace_ds / var_a;
    if (!(scale > 0.0)) throw DataError("umeyama_align: non-positive scale");
  }
  const Eigen::Vector3d t = mu_b - scale * R * mu_a;

  Eigen::Quaterniond eq(R);
  Sim3 out;
  out.scale = scale;
  out.rotation = Quat{eq.w(), eq.x(), eq.y(), eq.z()}.normalized();
  out.translation = {t.x(), t.y(), t.z()};
  return out;
}

FusedPointmap fuse_confidence(const std::vector<const Pointmap*>& maps,
                              const std::vector<const ConfidenceMap*>& confs) {
  if (maps.empty() || maps.size() != confs.size())
    throw DataError("fuse_confidence: need matched non-empty measurement lists");
  const int h = maps[0]->height, w = maps[0]->width;
  const uint32_t tag = maps[0]->frame_tag;
  for (size_t m = 0; m < maps.size(); ++m) {
    if (maps[m]->height != h || maps[m]->width != w || confs[m]->height != h || confs[m]->width != w)
      throw ShapeError("fuse_confidence: resolution mismatch in measurement " + std::to_string(m));
    if (maps[m]->frame_tag != tag)
      throw DataError("fuse_confidence: frame tag mismatch in measurement " + std::to_string(m) +
                      " (" + std::to_string(maps[m]->frame_tag) + " vs " + std::to_string(tag) + ")");
  }
  FusedPointmap out;
  out.points = Pointmap::allocate(h, w, tag);
  out.confidence = ConfidenceMap::ones(h, w);
  const size_t n = static_cast<size_t>(h) * w;
  for (size_t i = 0; i < n; ++i) {
    double cw = 0.0;
    Vec3 p{0.0, 0.0, 0.0};
    for (size_t m = 0; m < maps.size(); ++m) {
      if (!maps[m]->valid[i]) continue;
      const double c = confs[m]->c[i];
      cw += c;
      p = p + c * maps[m]->point(i);
    }
    if (cw <= 0.0) {
      out.points.valid[i] = 0;
      out.confidence.c[i] = 0.0f;
      continue;
    }
    out.points.set_point(i, (1.0 / cw) * p);
    out.confidence.c[i] = static_cast<float>(cw);
  }
  return out;
}

void write_pointmap(const std::string& path, const Pointmap& pm) {
  ByteWriter w;
  w.magic("C3RP");
  w.u16(static_cast<uint16_t>(pm.height));
  w.u16(static_cast<uint16_t>(pm.width));
  w.u32(pm.frame_tag);
  w.bytes(pm.xyz.data(), pm.xyz.size() * sizeof(float));
  w.bytes(pm.valid.data(), pm.valid.size());
  write_file(path, w.data());
}

Pointmap read_pointmap(const std::string& path) {
  auto raw = read_file(path);
  ByteReader r(raw.data(), raw.size(), path);
  r.expect_magic("C3RP");
  const int h = r.u16();
  const int w = r.u16();
  const uint32_t tag = r.u32();
  Pointmap pm = Pointmap::allocate(h, w, tag);
  r.bytes(pm.xyz.data(), pm.xyz.size() * sizeof(float));
  r.bytes(pm.valid.data(), pm.valid.size());
  if (r.remaining() != 0) r.fail("trailing bytes after validity mask");
  return pm;
}

void write_ply(const std::string& path, const Pointmap& pm, const ConfidenceMap* conf) {
  size_t count = 0;
  for (uint8_t v : pm.valid) count += v ? 1 : 0;
  std::ostringstream os;
  os << "ply\nformat ascii 1.0\nelement vertex " << count
     << "\nproperty float x\nproperty float y\nproperty float z\nproperty float gray\nend_header\n";
  const size_t n = pm.pixels();
  for (size_t i = 0; i < n; ++i) {
    if (!pm.valid[i]) continue;
    const Vec3 p = pm.point(i);
    const double g = conf ? conf->c[i] : 1.0;
    os << format_double(p[0]) << " " << format_double(p[1]) << " " << format_double(p[2]) << " "
       << format_double(g) << "\n";
  }
  write_text_file(path, os.str());
}

void write_tum_trajectory(const std::string& path, const std::vector<TimedPose>& traj) {
  std::ostringstream os;
  os << "# timestamp tx ty tz qx qy qz qw\n";
  for (const auto& p : traj) {
    const Quat& q = p.world_from_cam.q;
    const Vec3& t = p.world_from_cam.t;
    os << format_double(p.timestamp) << " " << format_double(t[0]) << " " << format_double(t[1])
       << " " << format_double(t[2]) << " " << format_double(q.x) << " " << format_double(q.y)
       << " " << format_double(q.z) << " " << format_double(q.w) << "\n";
  }
  write_text_file(path, os.str());
}

std::vector<TimedPose> read_tum_trajectory(const std::string& path) {
  std::istringstream is(read_text_file(path));
  std::vector<TimedPose> out;
  std::string line;
  size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    TimedPose p;
    double qx, qy, qz, qw;
    if (!(ls >> p.timestamp >> p.world_from_cam.t[0] >> p.world_from_cam.t[1] >>
          p.world_from_cam.t[2] >> qx >> qy >> qz >> qw))
      throw DataError(path + ": malformed TUM line " + std::to_string(lineno));
    p.world_from_cam.q = Quat{qw, qx, qy, qz}.normalized();
    out.push_back(p);
  }
  return out;
}

}  // namespace c3r
