#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace c3r {

using Vec3 = std::array<double, 3>;
using Mat3 = std::array<std::array<double, 3>, 3>;

Vec3 operator+(const Vec3& a, const Vec3& b);
Vec3 operator-(const Vec3& a, const Vec3& b);
Vec3 operator*(double s, const Vec3& a);
double dot(const Vec3& a, const Vec3& b);
Vec3 cross(const Vec3& a, const Vec3& b);
double norm(const Vec3& a);

// Unit quaternion (w, x, y, z).
struct Quat {
  double w = 1.0, x = 0.0, y = 0.0, z = 0.0;

  static Quat identity() { return {}; }
  static Quat from_axis_angle(const Vec3& axis_angle);
  Quat conjugate() const { return {w, -x, -y, -z}; }
  Quat normalized() const;
  Mat3 to_matrix() const;
  Vec3 rotate(const Vec3& v) const;
  Vec3 to_axis_angle() const;
  double angle() const;
};

Quat operator*(const Quat& a, const Quat& b);
Quat slerp(const Quat& a, const Quat& b, double t);

// Rigid transform: p' = R p + t.
struct SE3 {
  Quat q;
  Vec3 t{0.0, 0.0, 0.0};

  static SE3 identity() { return {}; }
  SE3 inverse() const;
  Vec3 apply(const Vec3& p) const;
};

SE3 operator*(const SE3& a, const SE3& b);

// Standard exp/log; xi = (rho, omega) with omega the rotation part.
using Vec6 = std::array<double, 6>;
SE3 se3_exp(const Vec6& xi);
Vec6 se3_log(const SE3& T);

struct CameraIntrinsics {
  double f = 80.0;
  double cx = 0.0;
  double cy = 0.0;
};

struct CameraState {
  CameraIntrinsics intrinsics;
  SE3 world_from_cam;
  double timestamp = 0.0;
};

// Per-pixel 3D points tagged with the camera frame they are expressed in.
// Mixing tags without an explicit transform is an error.
struct Pointmap {
  int height = 0;
  int width = 0;
  uint32_t frame_tag = 0;
  std::vector<float> xyz;       // 3 floats per pixel, row-major
  std::vector<uint8_t> valid;   // 1 byte per pixel

  static Pointmap allocate(int h, int w, uint32_t tag);
  size_t pixels() const { return static_cast<size_t>(height) * width; }
  Vec3 point(size_t pix) const {
    return {xyz[3 * pix], xyz[3 * pix + 1], xyz[3 * pix + 2]};
  }
  void set_point(size_t pix, const Vec3& p) {
    xyz[3 * pix] = static_cast<float>(p[0]);
    xyz[3 * pix + 1] = static_cast<float>(p[1]);
    xyz[3 * pix + 2] = static_cast<float>(p[2]);
  }
};

struct ConfidenceMap {
  int height = 0;
  int width = 0;
  std::vector<float> c;  // all >= 1

  static ConfidenceMap ones(int h, int w);
};

// point(u,v) = depth(u,v) * ((u-cx)/f, (v-cy)/f, 1); camera-frame output.
Pointmap unproject(const std::vector<float>& depth, int h, int w, const CameraIntrinsics& K,
                   uint32_t tag, const std::vector<uint8_t>* valid = nullptr);

// Pixel coordinates of a camera-frame point; returns false behind camera.
bool project(const CameraIntrinsics& K, const Vec3& p_cam, double* u, double* v);

// Applies new_from_old to every valid point and retags the map.
Pointmap transform_pointmap(const Pointmap& pm, const SE3& new_from_old, uint32_t new_tag);

// Mean distance of all valid points to the origin of their frame.
double norm_factor(const std::vector<const Pointmap*>& pointmaps);

struct Sim3 {
  double scale = 1.0;
  Quat rotation;
  Vec3 translation{0.0, 0.0, 0.0};

  Vec3 apply(const Vec3& p) const { return rotation.rotate(scale * p) + translation; }
};

// Least-squares alignment b ~= s R a + t over matched positions.
// mode SE3 fixes the scale at 1.
enum class AlignMode { se3, sim3 };
Sim3 umeyama_align(const std::vector<Vec3>& a, const std::vector<Vec3>& b, AlignMode mode);

// Per-pixel convex combination with weights C_i / sum(C_i); fused
// confidence is sum(C_i). Pixels invalid in a measurement are excluded from
// its contribution; pixels valid nowhere come out invalid.
struct FusedPointmap {
  Pointmap points;
  ConfidenceMap confidence;
};
FusedPointmap fuse_confidence(const std::vector<const Pointmap*>& maps,
                              const std::vector<const ConfidenceMap*>& confs);

// Pointmap file: "C3RP", H u16, W u16, ref tag u32, f32 xyz triples
// row-major, then u8 validity mask.
void write_pointmap(const std::string& path, const Pointmap& pm);
Pointmap read_pointmap(const std::string& path);

// ASCII PLY with per-vertex gray from confidence (or 1.0 when absent).
void write_ply(const std::string& path, const Pointmap& pm, const ConfidenceMap* conf = nullptr);

// TUM trajectory text: "timestamp tx ty tz qx qy qz qw" per line.
struct TimedPose {
  double timestamp = 0.0;
  SE3 world_from_cam;
};
void write_tum_trajectory(const std::string& path, const std::vector<TimedPose>& traj);
std::vector<TimedPose> read_tum_trajectory(const std::string& path);

}  // namespace c3r
