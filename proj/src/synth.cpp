#include "c3r/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <sstream>

#include "c3r/errors.hpp"
#include "c3r/io.hpp"
#include "c3r/kernels.hpp"

namespace c3r {

void SceneConfig::validate() const {
  if (height <= 0 || width <= 0 || height % patch_multiple || width % patch_multiple)
    throw DataError("SceneConfig: resolution " + std::to_string(width) + "x" + std::to_string(height) +
                    " must be a positive multiple of " + std::to_string(patch_multiple));
  if (frame_count < 2) throw DataError("SceneConfig: need at least 2 frames");
  if (!(focal > 0.0) || !(frame_dt > 0.0) || !(z_near > 0.0) || !(z_far > z_near))
    throw DataError("SceneConfig: invalid camera parameters");
  if (event_substeps < 1) throw DataError("SceneConfig: event_substeps must be >= 1");
}

namespace {

uint64_t hash2(uint64_t seed, int64_t ix, int64_t iy) {
  uint64_t h = seed ^ (0x9E3779B97F4A7C15ULL * static_cast<uint64_t>(ix)) ^
               (0xC2B2AE3D27D4EB4FULL * static_cast<uint64_t>(iy));
  h = (h ^ (h >> 33)) * 0xFF51AFD7ED558CCDULL;
  h = (h ^ (h >> 33)) * 0xC4CEB9FE1A85EC53ULL;
  return h ^ (h >> 33);
}

double lattice(uint64_t seed, int64_t ix, int64_t iy) {
  return static_cast<double>(hash2(seed, ix, iy) >> 11) * 0x1.0p-53;
}

double smooth5(double t) { return t * t * t * (t * (t * 6.0 - 15.0) + 10.0); }

double value_noise(uint64_t seed, double u, double v) {
  const double fu = std::floor(u), fv = std::floor(v);
  const auto ix = static_cast<int64_t>(fu), iy = static_cast<int64_t>(fv);
  const double tu = smooth5(u - fu), tv = smooth5(v - fv);
  const double a = lattice(seed, ix, iy), b = lattice(seed, ix + 1, iy);
  const double c = lattice(seed, ix, iy + 1), d = lattice(seed, ix + 1, iy + 1);
  return (a * (1 - tu) + b * tu) * (1 - tv) + (c * (1 - tu) + d * tu) * tv;
}

Vec3 sin_vec(const Vec3& amp, const Vec3& freq, const Vec3& phase, double t) {
  return {amp[0] * std::sin(freq[0] * t + phase[0]), amp[1] * std::sin(freq[1] * t + phase[1]),
          amp[2] * std::sin(freq[2] * t + phase[2])};
}

}  // namespace

double ProceduralTexture::sample(double u, double v) const {
  double acc = 0.0, amp = 1.0, total = 0.0, scale = 1.0 / base_scale;
  for (int o = 0; o < octaves; ++o) {
    acc += amp * value_noise(seed + static_cast<uint64_t>(o) * 0x9E37ULL, u * scale, v * scale);
    total += amp;
    amp *= 0.5;
    scale *= 2.0;
  }
  const double n = acc / total;  // in [0,1]
  return std::max(0.02, mean + (n - 0.5) * 2.0 * contrast);
}

SE3 CameraTrajectory::pose_at(double t) const {
  SE3 pose;
  pose.t = Vec3{trans_vel[0] * t, trans_vel[1] * t, trans_vel[2] * t} +
           sin_vec(trans_amp, trans_freq, trans_phase, t);
  pose.q = Quat::from_axis_angle(sin_vec(rot_amp, rot_freq, rot_phase, t));
  return pose;
}

SE3 SceneObject::pose_at(double t) const {
  SE3 pose;
  pose.t = base_pos + Vec3{trans_vel[0] * t, trans_vel[1] * t, trans_vel[2] * t} +
           sin_vec(trans_amp, trans_freq, trans_phase, t);
  pose.q = Quat::from_axis_angle((rot_rate * t) * rot_axis);
  return pose;
}

namespace {

struct ObjectState {
  SE3 world_from_object;
  SE3 object_from_world;
};

// Returns camera-z depth along the pixel ray, or a negative value on miss.
// Rays are parameterized as origin + s * dir with dir_cam.z == 1, so the
// parameter s is the camera-frame depth directly.
double intersect_object(const SceneObject& obj, const ObjectState& st, const Vec3& origin,
                        const Vec3& dir, Vec3* local) {
  if (obj.kind == SceneObject::Kind::plane) {
    const Vec3 n = st.world_from_object.q.rotate({0, 0, 1});
    const double denom = dot(dir, n);
    if (std::abs(denom) < 1e-12) return -1.0;
    const double s = dot(st.world_from_object.t - origin, n) / denom;
    if (s <= 1e-9) return -1.0;
    const Vec3 p = origin + s * dir;
    const Vec3 loc = st.object_from_world.apply(p);
    if (std::abs(loc[0]) > obj.half_a || std::abs(loc[1]) > obj.half_b) return -1.0;
    *local = loc;
    return s;
  }
  // sphere
  const Vec3 oc = origin - st.world_from_object.t;
  const double a = dot(dir, dir);
  const double b = 2.0 * dot(oc, dir);
  const double c = dot(oc, oc) - obj.radius * obj.radius;
  const double disc = b * b - 4 * a * c;
  if (disc < 0) return -1.0;
  const double sq = std::sqrt(disc);
  double s = (-b - sq) / (2 * a);
  if (s <= 1e-9) s = (-b + sq) / (2 * a);
  if (s <= 1e-9) return -1.0;
  const Vec3 p = origin + s * dir;
  *local = st.object_from_world.apply(p);
  return s;
}

double object_intensity(const SceneObject& obj, const Vec3& local) {
  if (obj.kind == SceneObject::Kind::plane) return obj.texture.sample(local[0], local[1]);
  // angular parameterization keeps the texture rigid on the sphere
  const double u = std::atan2(local[1], local[0]) * obj.radius;
  const double v = std::acos(std::clamp(local[2] / obj.radius, -1.0, 1.0)) * obj.radius;
  return obj.texture.sample(u, v);
}

struct FrameGeometry {
  SE3 world_from_cam;
  SE3 cam_from_world;
  std::vector<ObjectState> objects;
};

FrameGeometry frame_geometry(const Scene& scene, double t) {
  FrameGeometry g;
  g.world_from_cam = scene.camera.pose_at(t);
  g.cam_from_world = g.world_from_cam.inverse();
  g.objects.reserve(scene.objects.size());
  for (const auto& obj : scene.objects) {
    const SE3 wfo = obj.pose_at(t);
    g.objects.push_back({wfo, wfo.inverse()});
  }
  return g;
}

struct Hit {
  double depth;     // camera-frame z
  int object;       // -1 = background
  Vec3 local;       // object-local point, or world point for background
  double intensity;
};

Hit trace_pixel(const Scene& scene, const SceneConfig& cfg, const FrameGeometry& g, double u,
                double v) {
  const CameraIntrinsics K{cfg.focal, (cfg.width - 1) * 0.5, (cfg.height - 1) * 0.5};
  const Vec3 dir_cam{(u - K.cx) / K.f, (v - K.cy) / K.f, 1.0};
  const Vec3 origin = g.world_from_cam.t;
  const Vec3 dir = g.world_from_cam.q.rotate(dir_cam);

  Hit hit{-1.0, -1, {0, 0, 0}, 0.0};
  // background: world plane z = background_z
  if (std::abs(dir[2]) > 1e-12) {
    const double s = (scene.background_z - origin[2]) / dir[2];
    if (s > 1e-9) {
      const Vec3 p = origin + s * dir;
      hit = {s, -1, p, scene.background.sample(p[0], p[1])};
    }
  }
  for (size_t oi = 0; oi < scene.objects.size(); ++oi) {
    Vec3 local;
    const double s = intersect_object(scene.objects[oi], g.objects[oi], origin, dir, &local);
    if (s > 0 && (hit.depth < 0 || s < hit.depth)) {
      hit = {s, static_cast<int>(oi), local, object_intensity(scene.objects[oi], local)};
    }
  }
  if (hit.depth < 0) {
    // ray parallel to the background plane and missing all objects; clamp to far
    hit = {cfg.z_far, -1, origin + cfg.z_far * dir, 0.5};
  }
  return hit;
}

}  // namespace

RenderedView render_view(const Scene& scene, const SceneConfig& cfg, double t) {
  const size_t npix = static_cast<size_t>(cfg.height) * cfg.width;
  RenderedView view;
  view.intensity.resize(npix);
  view.depth.resize(npix);
  view.object_id.resize(npix);
  view.local_point.resize(npix);
  const FrameGeometry g = frame_geometry(scene, t);
  kernels::parallel_for_cost(static_cast<int64_t>(npix), static_cast<int64_t>(npix) * 16, [&](int64_t pi) {
    const int y = static_cast<int>(pi) / cfg.width;
    const int x = static_cast<int>(pi) % cfg.width;
    const Hit h = trace_pixel(scene, cfg, g, x, y);
    view.intensity[static_cast<size_t>(pi)] = h.intensity;
    view.depth[static_cast<size_t>(pi)] = static_cast<float>(h.depth);
    view.object_id[static_cast<size_t>(pi)] = h.object;
    view.local_point[static_cast<size_t>(pi)] = h.local;
  });
  return view;
}

FlowField flow_between(const Scene& scene, const SceneConfig& cfg, double ta, double tb) {
  const CameraIntrinsics K{cfg.focal, (cfg.width - 1) * 0.5, (cfg.height - 1) * 0.5};
  const RenderedView va = render_view(scene, cfg, ta);
  const RenderedView vb = render_view(scene, cfg, tb);
  const FrameGeometry gb = frame_geometry(scene, tb);

  FlowField flow;
  flow.height = cfg.height;
  flow.width = cfg.width;
  const size_t npix = static_cast<size_t>(cfg.height) * cfg.width;
  flow.du.assign(npix, 0.0f);
  flow.dv.assign(npix, 0.0f);
  flow.valid.assign(npix, 0);

  kernels::parallel_for_cost(static_cast<int64_t>(npix), static_cast<int64_t>(npix) * 8, [&](int64_t pi) {
    const int y = static_cast<int>(pi) / cfg.width;
    const int x = static_cast<int>(pi) % cfg.width;
    const int oid = va.object_id[static_cast<size_t>(pi)];
    // world position of the surface point at tb
    Vec3 pw;
    if (oid < 0) {
      pw = va.local_point[static_cast<size_t>(pi)];  // background is static
    } else {
      pw = scene.objects[static_cast<size_t>(oid)].pose_at(tb).apply(va.local_point[static_cast<size_t>(pi)]);
    }
    const Vec3 pc = gb.cam_from_world.apply(pw);
    double u1, v1;
    if (!project(K, pc, &u1, &v1)) return;
    flow.du[static_cast<size_t>(pi)] = static_cast<float>(u1 - x);
    flow.dv[static_cast<size_t>(pi)] = static_cast<float>(v1 - y);
    if (u1 < 0 || u1 > cfg.width - 1 || v1 < 0 || v1 > cfg.height - 1) return;
    // z-buffer visibility at the nearest target pixel
    const int xi = static_cast<int>(std::lround(u1));
    const int yi = static_cast<int>(std::lround(v1));
    const double zbuf = vb.depth[static_cast<size_t>(yi) * cfg.width + xi];
    if (pc[2] > zbuf * 1.01 + 0.02) return;  // occluded
    flow.valid[static_cast<size_t>(pi)] = 1;
  });
  return flow;
}

Scene random_scene(const SceneConfig& cfg, Rng& rng) {
  Rng r = rng.split(0xA11CE);
  Scene scene;
  scene.background_z = cfg.z_far;
  scene.background = {r.next_u64(), 3, 0.7, 0.55, 0.28};

  const double span = cfg.frame_dt * (cfg.frame_count - 1);
  const double base_freq = 2.0 * 3.14159265358979323846 / span;
  auto rand_freq = [&]() { return base_freq * r.uniform(0.6, 1.4); };
  auto rand_phase = [&]() { return r.uniform(0.0, 6.283185307179586); };

  scene.camera.trans_amp = {cfg.cam_translation_amp * r.uniform(0.5, 1.0),
                            cfg.cam_translation_amp * r.uniform(0.5, 1.0),
                            cfg.cam_translation_amp * r.uniform(0.3, 0.8)};
  scene.camera.trans_freq = {rand_freq(), rand_freq(), rand_freq()};
  scene.camera.trans_phase = {rand_phase(), rand_phase(), rand_phase()};
  scene.camera.rot_amp = {cfg.cam_rotation_amp * r.uniform(0.4, 1.0),
                          cfg.cam_rotation_amp * r.uniform(0.4, 1.0),
                          cfg.cam_rotation_amp * r.uniform(0.2, 0.6)};
  scene.camera.rot_freq = {rand_freq(), rand_freq(), rand_freq()};
  scene.camera.rot_phase = {rand_phase(), rand_phase(), rand_phase()};

  const int n_obj = cfg.min_objects +
                    static_cast<int>(r.uniform_index(static_cast<uint64_t>(cfg.max_objects - cfg.min_objects + 1)));
  const double fov_half = 0.5 * cfg.width / cfg.focal;
  for (int i = 0; i < n_obj; ++i) {
    SceneObject obj;
    obj.kind = r.uniform() < 0.5 ? SceneObject::Kind::plane : SceneObject::Kind::sphere;
    const double z = r.uniform(cfg.z_near + 0.2, cfg.z_far - 1.2);
    obj.base_pos = {r.uniform(-0.6, 0.6) * fov_half * z, r.uniform(-0.6, 0.6) * fov_half * z, z};
    obj.trans_amp = {0.18 * r.uniform(0.3, 1.0), 0.18 * r.uniform(0.3, 1.0), 0.25 * r.uniform(0.2, 1.0)};
    obj.trans_freq = {rand_freq(), rand_freq(), rand_freq()};
    obj.trans_phase = {rand_phase(), rand_phase(), rand_phase()};
    const double an = r.uniform(0.2, 1.0), bn = r.uniform(0.2, 1.0), cn = r.uniform(0.2, 1.0);
    const double nn = std::sqrt(an * an + bn * bn + cn * cn);
    obj.rot_axis = {an / nn, bn / nn, cn / nn};
    obj.rot_rate = r.uniform(-0.5, 0.5) / span;
    obj.half_a = r.uniform(0.45, 1.0);
    obj.half_b = r.uniform(0.45, 1.0);
    obj.radius = r.uniform(0.35, 0.7);
    obj.texture = {r.next_u64(), 3, r.uniform(0.2, 0.4), r.uniform(0.45, 0.6), r.uniform(0.25, 0.35)};
    scene.objects.push_back(obj);
  }
  return scene;
}

Sequence render_sequence(const Scene& scene, const SceneConfig& cfg) {
  cfg.validate();
  Sequence seq;
  seq.config = cfg;
  const size_t npix = static_cast<size_t>(cfg.height) * cfg.width;
  const CameraIntrinsics K{cfg.focal, (cfg.width - 1) * 0.5, (cfg.height - 1) * 0.5};

  for (int ti = 0; ti < cfg.frame_count; ++ti) seq.timestamps.push_back(ti * cfg.frame_dt);

  // fine-rate video for the event simulator (log brightness)
  const int sub = cfg.event_substeps;
  const int fine_count = (cfg.frame_count - 1) * sub + 1;
  std::vector<std::vector<double>> log_video(static_cast<size_t>(fine_count));
  std::vector<double> fine_times(static_cast<size_t>(fine_count));

  for (int fi = 0; fi < fine_count; ++fi) {
    const double t = (static_cast<double>(fi) / sub) * cfg.frame_dt;
    fine_times[static_cast<size_t>(fi)] = t;
    RenderedView view = render_view(scene, cfg, t);
    auto& logf = log_video[static_cast<size_t>(fi)];
    logf.resize(npix);
    for (size_t p = 0; p < npix; ++p) logf[p] = std::log(view.intensity[p] + 1e-3);

    if (fi % sub == 0) {
      const int ti = fi / sub;
      std::vector<float> frame(npix);
      for (size_t p = 0; p < npix; ++p) {
        const double q = std::round(std::clamp(view.intensity[p], 0.0, 1.0) * 255.0) / 255.0;
        frame[p] = static_cast<float>(q);
      }
      seq.frames.push_back(std::move(frame));
      seq.depths.push_back(view.depth);
      CameraState cam;
      cam.intrinsics = K;
      cam.world_from_cam = scene.camera.pose_at(t);
      cam.timestamp = t;
      seq.cameras.push_back(cam);
    }
  }

  for (int ti = 0; ti + 1 < cfg.frame_count; ++ti)
    seq.flows.push_back(flow_between(scene, cfg, seq.timestamps[static_cast<size_t>(ti)],
                                     seq.timestamps[static_cast<size_t>(ti) + 1]));

  Rng ev_rng = Rng(cfg.seed).split(0xE5E5);
  SimulatorConfig sim{cfg.contrast_threshold, cfg.threshold_jitter_sigma};
  seq.events = simulate_events(log_video, fine_times, cfg.height, cfg.width, sim, ev_rng);

  // degenerate means nothing moved: no events and identical poses
  double max_cam_motion = 0.0;
  for (const auto& cam : seq.cameras)
    max_cam_motion = std::max(max_cam_motion, norm(cam.world_from_cam.t - seq.cameras[0].world_from_cam.t) +
                                                  (cam.world_from_cam.q * seq.cameras[0].world_from_cam.q.conjugate()).angle());
  seq.degenerate = seq.events.events.empty() && max_cam_motion < 1e-9;
  return seq;
}

Sequence generate_sequence(const SceneConfig& cfg) {
  Rng rng(cfg.seed);
  Scene scene = random_scene(cfg, rng);
  return render_sequence(scene, cfg);
}

// ---- triplet pool ----

TripletPool build_triplet_pool(const std::vector<int>& sequence_lengths, int min_span, int max_span) {
  if (min_span < 2 || max_span < min_span) throw DataError("build_triplet_pool: invalid span range");
  // bucket key: (span, quartile of middle position)
  std::vector<TripletBucket> all;
  for (int span = min_span; span <= max_span; ++span)
    for (int q = 0; q < 4; ++q) all.push_back({span, q, {}});

  for (size_t si = 0; si < sequence_lengths.size(); ++si) {
    const int T = sequence_lengths[si];
    for (int span = min_span; span <= max_span; ++span) {
      for (int i0 = 0; i0 + span < T; ++i0) {
        const int i1 = i0 + span;
        for (int it = i0 + 1; it < i1; ++it) {
          const double rel = static_cast<double>(it - i0) / span;
          const int q = std::min(3, static_cast<int>(rel * 4.0));
          all[static_cast<size_t>((span - min_span) * 4 + q)].items.push_back(
              {static_cast<int>(si), i0, it, i1});
        }
      }
    }
  }
  TripletPool pool;
  for (auto& b : all) {
    if (b.items.empty()) continue;  // excluded (e.g. span 2 has only the middle quartile)
    pool.total += b.items.size();
    pool.buckets.push_back(std::move(b));
  }
  if (pool.buckets.empty()) throw DataError("build_triplet_pool: no valid triplets");
  return pool;
}

TripletRef sample_triplet_ref(const TripletPool& pool, Rng& rng) {
  const auto& bucket = pool.buckets[rng.uniform_index(pool.buckets.size())];
  return bucket.items[rng.uniform_index(bucket.items.size())];
}

// ---- sample materialization ----

namespace {

EventStream window_normalized(const EventStream& events, double t0, double t1) {
  EventStream out;
  out.height = events.height;
  out.width = events.width;
  out.t_start = 0.0;
  out.t_end = 1.0;
  const double span = t1 - t0;
  for (const Event& e : events.events) {
    if (e.t < t0 || e.t > t1) continue;
    out.events.push_back({(e.t - t0) / span, e.x, e.y, e.polarity});
  }
  out.sort_canonical();
  return out;
}

}  // namespace

TripletSample materialize_triplet(const Sequence& seq, const TripletRef& ref, int voxel_bins) {
  TripletSample s;
  s.ref = ref;
  const double t0 = seq.timestamps[static_cast<size_t>(ref.i0)];
  const double tt = seq.timestamps[static_cast<size_t>(ref.it)];
  const double t1 = seq.timestamps[static_cast<size_t>(ref.i1)];
  s.tau = (tt - t0) / (t1 - t0);
  s.frame0 = seq.frames[static_cast<size_t>(ref.i0)];
  s.frame1 = seq.frames[static_cast<size_t>(ref.i1)];

  EventStream win = window_normalized(seq.events, t0, t1);
  SplitStreams split = split_and_reverse(win, s.tau);
  s.vox_forward = voxelize(split.forward, voxel_bins);
  s.vox_backward = voxelize(split.backward_reversed, voxel_bins);

  const CameraState& c0 = seq.cameras[static_cast<size_t>(ref.i0)];
  const CameraState& ct = seq.cameras[static_cast<size_t>(ref.it)];
  const CameraState& c1 = seq.cameras[static_cast<size_t>(ref.i1)];
  const SE3 c0_from_world = c0.world_from_cam.inverse();
  const uint32_t tag0 = static_cast<uint32_t>(ref.i0);

  s.gt_source0 = unproject(seq.depths[static_cast<size_t>(ref.i0)], seq.config.height,
                           seq.config.width, c0.intrinsics, tag0);
  s.gt_source1 = transform_pointmap(
      unproject(seq.depths[static_cast<size_t>(ref.i1)], seq.config.height, seq.config.width,
                c1.intrinsics, static_cast<uint32_t>(ref.i1)),
      c0_from_world * c1.world_from_cam, tag0);
  s.gt_interp = transform_pointmap(
      unproject(seq.depths[static_cast<size_t>(ref.it)], seq.config.height, seq.config.width,
                ct.intrinsics, static_cast<uint32_t>(ref.it)),
      c0_from_world * ct.world_from_cam, tag0);
  return s;
}

TripletSample make_twin(const Sequence& seq, const TripletSample& sample, int voxel_bins) {
  TripletRef twin_ref{sample.ref.seq, sample.ref.i1, sample.ref.it, sample.ref.i0};
  TripletSample t;
  t.ref = twin_ref;
  t.tau = 1.0 - sample.tau;
  t.frame0 = sample.frame1;
  t.frame1 = sample.frame0;

  const double t0 = seq.timestamps[static_cast<size_t>(sample.ref.i0)];
  const double t1 = seq.timestamps[static_cast<size_t>(sample.ref.i1)];
  EventStream win = window_normalized(seq.events, t0, t1);
  EventStream reversed = reverse_stream(win);
  SplitStreams split = split_and_reverse(reversed, t.tau);
  t.vox_forward = voxelize(split.forward, voxel_bins);
  t.vox_backward = voxelize(split.backward_reversed, voxel_bins);

  const CameraState& c0 = seq.cameras[static_cast<size_t>(sample.ref.i0)];
  const CameraState& ct = seq.cameras[static_cast<size_t>(sample.ref.it)];
  const CameraState& c1 = seq.cameras[static_cast<size_t>(sample.ref.i1)];
  const SE3 c1_from_world = c1.world_from_cam.inverse();
  const uint32_t tag1 = static_cast<uint32_t>(sample.ref.i1);

  t.gt_source0 = unproject(seq.depths[static_cast<size_t>(sample.ref.i1)], seq.config.height,
                           seq.config.width, c1.intrinsics, tag1);
  t.gt_source1 = transform_pointmap(
      unproject(seq.depths[static_cast<size_t>(sample.ref.i0)], seq.config.height, seq.config.width,
                c0.intrinsics, static_cast<uint32_t>(sample.ref.i0)),
      c1_from_world * c0.world_from_cam, tag1);
  t.gt_interp = transform_pointmap(
      unproject(seq.depths[static_cast<size_t>(sample.ref.it)], seq.config.height, seq.config.width,
                ct.intrinsics, static_cast<uint32_t>(sample.ref.it)),
      c1_from_world * ct.world_from_cam, tag1);
  return t;
}

// ---- bundle io ----

namespace fs = std::filesystem;

namespace {
std::string frame_name(const char* prefix, int i, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s_%04d%s", prefix, i, ext);
  return buf;
}
}  // namespace

void write_depth_file(const std::string& path, const std::vector<float>& depth, int h, int w) {
  ByteWriter bw;
  bw.magic("C3RD");
  bw.u16(static_cast<uint16_t>(h));
  bw.u16(static_cast<uint16_t>(w));
  bw.bytes(depth.data(), depth.size() * sizeof(float));
  write_file(path, bw.data());
}

std::vector<float> read_depth_file(const std::string& path, int* h, int* w) {
  auto raw = read_file(path);
  ByteReader r(raw.data(), raw.size(), path);
  r.expect_magic("C3RD");
  *h = r.u16();
  *w = r.u16();
  std::vector<float> depth(static_cast<size_t>(*h) * *w);
  r.bytes(depth.data(), depth.size() * sizeof(float));
  if (r.remaining() != 0) r.fail("trailing bytes");
  return depth;
}

void write_flow_file(const std::string& path, const FlowField& flow) {
  ByteWriter bw;
  bw.magic("C3RF");
  bw.u16(static_cast<uint16_t>(flow.height));
  bw.u16(static_cast<uint16_t>(flow.width));
  bw.bytes(flow.du.data(), flow.du.size() * sizeof(float));
  bw.bytes(flow.dv.data(), flow.dv.size() * sizeof(float));
  bw.bytes(flow.valid.data(), flow.valid.size());
  write_file(path, bw.data());
}

FlowField read_flow_file(const std::string& path) {
  auto raw = read_file(path);
  ByteReader r(raw.data(), raw.size(), path);
  r.expect_magic("C3RF");
  FlowField flow;
  flow.height = r.u16();
  flow.width = r.u16();
  const size_t npix = static_cast<size_t>(flow.height) * flow.width;
  flow.du.resize(npix);
  flow.dv.resize(npix);
  flow.valid.resize(npix);
  r.bytes(flow.du.data(), npix * sizeof(float));
  r.bytes(flow.dv.data(), npix * sizeof(float));
  r.bytes(flow.valid.data(), npix);
  if (r.remaining() != 0) r.fail("trailing bytes");
  return flow;
}

void write_bundle(const std::string& dir, const Sequence& seq) {
  fs::create_directories(dir);
  std::ostringstream meta;
  meta << "height=" << seq.config.height << "\n";
  meta << "width=" << seq.config.width << "\n";
  meta << "focal=" << format_double(seq.config.focal) << "\n";
  meta << "frame_count=" << seq.config.frame_count << "\n";
  meta << "frame_dt=" << format_double(seq.config.frame_dt) << "\n";
  meta << "seed=" << seq.config.seed << "\n";
  meta << "degenerate=" << (seq.degenerate ? 1 : 0) << "\n";
  write_text_file(dir + "/meta.txt", meta.str());

  for (int i = 0; i < seq.config.frame_count; ++i) {
    write_pgm(dir + "/" + frame_name("frame", i, ".pgm"), seq.frames[static_cast<size_t>(i)],
              seq.config.height, seq.config.width);
    write_depth_file(dir + "/" + frame_name("depth", i, ".c3rd"), seq.depths[static_cast<size_t>(i)],
                     seq.config.height, seq.config.width);
  }
  for (size_t i = 0; i < seq.flows.size(); ++i)
    write_flow_file(dir + "/" + frame_name("flow", static_cast<int>(i), ".c3rf"), seq.flows[i]);

  std::vector<TimedPose> traj;
  for (const auto& cam : seq.cameras) traj.push_back({cam.timestamp, cam.world_from_cam});
  write_tum_trajectory(dir + "/poses.tum", traj);
  write_events(dir + "/events.c3re", seq.events);
}

Sequence read_bundle(const std::string& dir) {
  Sequence seq;
  std::istringstream meta(read_text_file(dir + "/meta.txt"));
  std::string line;
  while (std::getline(meta, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = line.substr(0, eq);
    const std::string val = line.substr(eq + 1);
    if (key == "height") seq.config.height = std::stoi(val);
    else if (key == "width") seq.config.width = std::stoi(val);
    else if (key == "focal") seq.config.focal = std::stod(val);
    else if (key == "frame_count") seq.config.frame_count = std::stoi(val);
    else if (key == "frame_dt") seq.config.frame_dt = std::stod(val);
    else if (key == "seed") seq.config.seed = std::stoull(val);
    else if (key == "degenerate") seq.degenerate = val == "1";
  }
  const CameraIntrinsics K{seq.config.focal, (seq.config.width - 1) * 0.5,
                           (seq.config.height - 1) * 0.5};
  auto traj = read_tum_trajectory(dir + "/poses.tum");
  if (static_cast<int>(traj.size()) != seq.config.frame_count)
    throw DataError(dir + ": pose count " + std::to_string(traj.size()) + " does not match frame_count");
  for (int i = 0; i < seq.config.frame_count; ++i) {
    int h = 0, w = 0;
    seq.frames.push_back(read_pgm(dir + "/" + frame_name("frame", i, ".pgm"), &h, &w));
    if (h != seq.config.height || w != seq.config.width)
      throw DataError(dir + ": frame " + std::to_string(i) + " resolution mismatch");
    seq.depths.push_back(read_depth_file(dir + "/" + frame_name("depth", i, ".c3rd"), &h, &w));
    seq.timestamps.push_back(traj[static_cast<size_t>(i)].timestamp);
    CameraState cam;
    cam.intrinsics = K;
    cam.world_from_cam = traj[static_cast<size_t>(i)].world_from_cam;
    cam.timestamp = traj[static_cast<size_t>(i)].timestamp;
    seq.cameras.push_back(cam);
  }
  for (int i = 0; i + 1 < seq.config.frame_count; ++i)
    seq.flows.push_back(read_flow_file(dir + "/" + frame_name("flow", i, ".c3rf")));
  seq.events = read_events(dir + "/events.c3re");
  return seq;
}

}  // namespace c3r
