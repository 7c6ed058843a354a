#include "c3r/events.hpp"

#include <algorithm>
#include <cmath>

#include "c3r/errors.hpp"
#include "c3r/io.hpp"
#include "c3r/kernels.hpp"

namespace c3r {

bool event_order(const Event& a, const Event& b) {
  if (a.t != b.t) return a.t < b.t;
  if (a.y != b.y) return a.y < b.y;
  if (a.x != b.x) return a.x < b.x;
  return a.polarity < b.polarity;
}

void EventStream::validate() const {
  double prev = t_start;
  for (size_t i = 0; i < events.size(); ++i) {
    const Event& e = events[i];
    if (e.x >= width || e.y >= height)
      throw DataError("event " + std::to_string(i) + " out of sensor bounds (" + std::to_string(e.x) +
                      "," + std::to_string(e.y) + ") for " + std::to_string(width) + "x" +
                      std::to_string(height));
    if (e.polarity != 1 && e.polarity != -1)
      throw DataError("event " + std::to_string(i) + " has polarity " + std::to_string(e.polarity));
    if (e.t < t_start - 1e-12 || e.t > t_end + 1e-12)
      throw DataError("event " + std::to_string(i) + " timestamp " + std::to_string(e.t) +
                      " outside span [" + std::to_string(t_start) + "," + std::to_string(t_end) + "]");
    if (e.t < prev)
      throw DataError("event " + std::to_string(i) + " breaks timestamp ordering");
    prev = e.t;
  }
}

void EventStream::sort_canonical() { std::stable_sort(events.begin(), events.end(), event_order); }

double EventVoxelGrid::signed_mass() const {
  double acc = 0.0;
  for (float v : values) acc += v;
  return acc;
}

EventStream simulate_events(const std::vector<std::vector<double>>& log_frames,
                            const std::vector<double>& timestamps, int height, int width,
                            const SimulatorConfig& cfg, Rng& rng) {
  const size_t T = log_frames.size();
  if (T < 2) throw DataError("simulate_events: need at least 2 frames, got " + std::to_string(T));
  if (timestamps.size() != T) throw DataError("simulate_events: timestamp count mismatch");
  if (!(cfg.contrast_threshold > 0.0)) throw DataError("simulate_events: threshold must be positive");
  for (size_t i = 0; i + 1 < T; ++i)
    if (!(timestamps[i + 1] > timestamps[i]))
      throw DataError("simulate_events: non-monotone timestamps at index " + std::to_string(i + 1));
  const size_t npix = static_cast<size_t>(height) * width;
  for (size_t i = 0; i < T; ++i)
    if (log_frames[i].size() != npix) throw DataError("simulate_events: frame size mismatch");

  // Per-pixel simulation is independent; each pixel gets its own RNG split
  // so the jitter stream does not depend on the thread schedule.
  std::vector<std::vector<Event>> per_pixel(npix);
  const bool jitter = cfg.threshold_jitter_sigma > 0.0;
  kernels::parallel_for_cost(static_cast<int64_t>(npix), static_cast<int64_t>(npix * T), [&](int64_t pi) {
    const int y = static_cast<int>(pi) / width;
    const int x = static_cast<int>(pi) % width;
    Rng pix_rng = rng.split(static_cast<uint64_t>(pi));
    double ref = log_frames[0][static_cast<size_t>(pi)];
    auto& out = per_pixel[static_cast<size_t>(pi)];
    for (size_t f = 0; f + 1 < T; ++f) {
      const double v0 = log_frames[f][static_cast<size_t>(pi)];
      const double v1 = log_frames[f + 1][static_cast<size_t>(pi)];
      if (v0 == v1) continue;
      const double t0 = timestamps[f], t1 = timestamps[f + 1];
      const int dir = v1 > v0 ? 1 : -1;
      for (;;) {
        double c = cfg.contrast_threshold;
        if (jitter) c = std::max(0.01, c + pix_rng.normal(0.0, cfg.threshold_jitter_sigma));
        const double level = ref + dir * c;
        const bool crossed = dir > 0 ? (level <= v1) : (level >= v1);
        if (!crossed) break;
        const double frac = (level - v0) / (v1 - v0);
        // crossings strictly before this segment started belong to earlier
        // segments (ref may lag behind after a direction change)
        const double t = t0 + std::min(std::max(frac, 0.0), 1.0) * (t1 - t0);
        out.push_back({t, static_cast<uint16_t>(x), static_cast<uint16_t>(y), static_cast<int8_t>(dir)});
        ref = level;
      }
    }
  });

  EventStream stream;
  stream.height = height;
  stream.width = width;
  stream.t_start = timestamps.front();
  stream.t_end = timestamps.back();
  size_t total = 0;
  for (const auto& v : per_pixel) total += v.size();
  stream.events.reserve(total);
  for (const auto& v : per_pixel) stream.events.insert(stream.events.end(), v.begin(), v.end());
  stream.sort_canonical();
  return stream;
}

SplitStreams split_and_reverse(const EventStream& stream, double tau) {
  if (!(tau > 0.0 && tau < 1.0))
    throw DataError("split_and_reverse: tau must lie in (0,1), got " + std::to_string(tau));
  SplitStreams out;
  out.forward.height = out.backward_reversed.height = stream.height;
  out.forward.width = out.backward_reversed.width = stream.width;
  out.forward.t_start = 0.0;
  out.forward.t_end = tau;
  out.backward_reversed.t_start = 0.0;
  out.backward_reversed.t_end = 1.0 - tau;
  for (const Event& e : stream.events) {
    if (e.t <= tau) {
      out.forward.events.push_back(e);
    } else {
      out.backward_reversed.events.push_back(
          {1.0 - e.t, e.x, e.y, static_cast<int8_t>(-e.polarity)});
    }
  }
  out.backward_reversed.sort_canonical();
  return out;
}

EventStream reverse_stream(const EventStream& stream) {
  EventStream out = stream;
  const double pivot = stream.t_start + stream.t_end;
  for (auto& e : out.events) {
    e.t = pivot - e.t;
    e.polarity = static_cast<int8_t>(-e.polarity);
  }
  out.sort_canonical();
  return out;
}

EventVoxelGrid voxelize(const EventStream& stream, int bins) {
  if (bins < 1) throw DataError("voxelize: bins must be >= 1, got " + std::to_string(bins));
  EventVoxelGrid grid;
  grid.bins = bins;
  grid.height = stream.height;
  grid.width = stream.width;
  grid.values.assign(static_cast<size_t>(bins) * stream.height * stream.width, 0.0f);
  if (stream.events.empty()) return grid;

  const double span = stream.t_end - stream.t_start;
  const double scale = (span > 0.0 && bins > 1) ? (bins - 1) / span : 0.0;

  // Events are bucketed per pixel so each output cell is owned by exactly
  // one task; the per-pixel accumulation order follows the canonical sort.
  const size_t npix = static_cast<size_t>(stream.height) * stream.width;
  std::vector<uint32_t> counts(npix, 0);
  for (const Event& e : stream.events) ++counts[static_cast<size_t>(e.y) * stream.width + e.x];
  std::vector<size_t> offsets(npix + 1, 0);
  for (size_t i = 0; i < npix; ++i) offsets[i + 1] = offsets[i] + counts[i];
  std::vector<uint32_t> order(stream.events.size());
  {
    std::vector<size_t> cursor(offsets.begin(), offsets.end() - 1);
    for (size_t i = 0; i < stream.events.size(); ++i) {
      const Event& e = stream.events[i];
      order[cursor[static_cast<size_t>(e.y) * stream.width + e.x]++] = static_cast<uint32_t>(i);
    }
  }
  kernels::parallel_for_cost(static_cast<int64_t>(npix), static_cast<int64_t>(stream.events.size()),
                             [&](int64_t pi) {
    for (size_t k = offsets[static_cast<size_t>(pi)]; k < offsets[static_cast<size_t>(pi) + 1]; ++k) {
      const Event& e = stream.events[order[k]];
      const double tstar = (e.t - stream.t_start) * scale;
      const int b0 = static_cast<int>(std::floor(tstar));
      const double w1 = tstar - b0;
      const float p = static_cast<float>(e.polarity);
      if (b0 >= 0 && b0 < bins) grid.at(b0, e.y, e.x) += p * static_cast<float>(1.0 - w1);
      if (b0 + 1 < bins && w1 > 0.0) grid.at(b0 + 1, e.y, e.x) += p * static_cast<float>(w1);
    }
  });
  return grid;
}

void write_events(const std::string& path, const EventStream& stream) {
  ByteWriter w;
  w.magic("C3RE");
  w.u32(kEventFileVersion);
  w.u16(static_cast<uint16_t>(stream.height));
  w.u16(static_cast<uint16_t>(stream.width));
  w.f64(stream.t_start);
  w.f64(stream.t_end);
  w.u64(stream.events.size());
  for (const Event& e : stream.events) {
    w.f64(e.t);
    w.u16(e.x);
    w.u16(e.y);
    w.i8(e.polarity);
  }
  write_file(path, w.data());
}

EventStream read_events(const std::string& path) {
  auto raw = read_file(path);
  ByteReader r(raw.data(), raw.size(), path);
  r.expect_magic("C3RE");
  const uint32_t version = r.u32();
  if (version != kEventFileVersion) r.fail("unsupported event file version " + std::to_string(version));
  EventStream stream;
  stream.height = r.u16();
  stream.width = r.u16();
  stream.t_start = r.f64();
  stream.t_end = r.f64();
  const uint64_t count = r.u64();
  stream.events.resize(count);
  for (uint64_t i = 0; i < count; ++i) {
    Event& e = stream.events[i];
    e.t = r.f64();
    e.x = r.u16();
    e.y = r.u16();
    e.polarity = r.i8();
  }
  if (r.remaining() != 0) r.fail("trailing bytes after last event");
  stream.validate();
  return stream;
}

}  // namespace c3r
