#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "c3r/events.hpp"
#include "c3r/geometry.hpp"
#include "c3r/rng.hpp"

namespace c3r {

struct SceneConfig {
  int height = 64;
  int width = 64;
  double focal = 80.0;
  int frame_count = 33;  // (frame_count-1) divisible by k+1 for k in {1,3,7,15}
  double frame_dt = 1.0 / 32.0;
  int patch_multiple = 8;  // H, W must be divisible by this
  uint64_t seed = 0;
  int min_objects = 1;
  int max_objects = 3;
  int event_substeps = 8;
  double contrast_threshold = 0.2;
  double threshold_jitter_sigma = 0.0;
  double z_near = 1.8;
  double z_far = 6.0;  // background plane depth
  double cam_translation_amp = 0.22;
  double cam_rotation_amp = 0.05;

  void validate() const;
};

// Multi-octave value noise on a 2-D lattice; smooth and deterministic.
struct ProceduralTexture {
  uint64_t seed = 0;
  int octaves = 3;
  double base_scale = 0.3;  // feature size in object units
  double mean = 0.55;
  double contrast = 0.3;

  double sample(double u, double v) const;  // intensity, positive
};

struct CameraTrajectory {
  Vec3 trans_vel{0, 0, 0};
  Vec3 trans_amp{0, 0, 0};
  Vec3 trans_freq{0, 0, 0};
  Vec3 trans_phase{0, 0, 0};
  Vec3 rot_amp{0, 0, 0};
  Vec3 rot_freq{0, 0, 0};
  Vec3 rot_phase{0, 0, 0};

  SE3 pose_at(double t) const;  // world_from_cam
};

struct SceneObject {
  enum class Kind { plane, sphere };
  Kind kind = Kind::plane;
  Vec3 base_pos{0, 0, 3};
  Vec3 trans_vel{0, 0, 0};
  Vec3 trans_amp{0, 0, 0};
  Vec3 trans_freq{0, 0, 0};
  Vec3 trans_phase{0, 0, 0};
  Vec3 rot_axis{0, 0, 1};
  double rot_rate = 0.0;
  double half_a = 0.5, half_b = 0.5;  // plane half extents
  double radius = 0.4;                // sphere
  ProceduralTexture texture;

  SE3 pose_at(double t) const;  // world_from_object
};

struct Scene {
  CameraTrajectory camera;
  std::vector<SceneObject> objects;
  ProceduralTexture background;
  double background_z = 6.0;
};

struct FlowField {
  int height = 0;
  int width = 0;
  std::vector<float> du, dv;   // pixel displacement toward the next frame
  std::vector<uint8_t> valid;  // 0 where occluded or out of bounds
};

struct Sequence {
  SceneConfig config;
  std::vector<double> timestamps;
  std::vector<std::vector<float>> frames;  // intensity in [0,1], 8-bit quantized
  std::vector<std::vector<float>> depths;  // camera-frame z in meters
  std::vector<CameraState> cameras;        // world_from_cam per frame
  std::vector<FlowField> flows;            // t -> t+1, frame_count-1 entries
  EventStream events;                      // full sequence span
  bool degenerate = false;
};

// One rendered view plus the correspondence buffers the flow needs.
struct RenderedView {
  std::vector<double> intensity;  // pre-quantization
  std::vector<float> depth;
  std::vector<int> object_id;     // -1 for background
  std::vector<Vec3> local_point;  // object-local (or world for background)
};

RenderedView render_view(const Scene& scene, const SceneConfig& cfg, double t);
FlowField flow_between(const Scene& scene, const SceneConfig& cfg, double ta, double tb);

Scene random_scene(const SceneConfig& cfg, Rng& rng);
Sequence render_sequence(const Scene& scene, const SceneConfig& cfg);
Sequence generate_sequence(const SceneConfig& cfg);

// ---- triplet sampling (span 2..10, middle position balanced) ----

struct TripletRef {
  int seq = 0;
  int i0 = 0, it = 0, i1 = 0;
};

struct TripletBucket {
  int span = 0;
  int quartile = 0;  // quartile of (it-i0)/(i1-i0)
  std::vector<TripletRef> items;
};

struct TripletPool {
  std::vector<TripletBucket> buckets;  // non-empty buckets only, sorted by (span, quartile)
  size_t total = 0;
};

TripletPool build_triplet_pool(const std::vector<int>& sequence_lengths, int min_span = 2,
                               int max_span = 10);
TripletRef sample_triplet_ref(const TripletPool& pool, Rng& rng);

// A fully materialized training sample. Ground-truth pointmaps are all
// expressed in the camera frame of i0 (the twin's i0 is the original i1).
struct TripletSample {
  TripletRef ref;
  double tau = 0.0;
  std::vector<float> frame0, frame1;
  EventVoxelGrid vox_forward, vox_backward;
  Pointmap gt_source0, gt_source1, gt_interp;
};

TripletSample materialize_triplet(const Sequence& seq, const TripletRef& ref, int voxel_bins);
// Swapped frames, reversed events, target time 1 - tau, camera-i1 coordinates.
TripletSample make_twin(const Sequence& seq, const TripletSample& sample, int voxel_bins);

// ---- sequence bundle on disk ----
// frames as PGM, depth as "C3RD" f32, poses as TUM text, events as "C3RE",
// flow as "C3RF" (du plane, dv plane, validity mask), meta.txt key=value.
void write_bundle(const std::string& dir, const Sequence& seq);
Sequence read_bundle(const std::string& dir);

void write_depth_file(const std::string& path, const std::vector<float>& depth, int h, int w);
std::vector<float> read_depth_file(const std::string& path, int* h, int* w);
void write_flow_file(const std::string& path, const FlowField& flow);
FlowField read_flow_file(const std::string& path);

}  // namespace c3r
