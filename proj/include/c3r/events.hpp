#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "c3r/rng.hpp"

namespace c3r {

struct Event {
  double t = 0.0;
  uint16_t x = 0;
  uint16_t y = 0;
  int8_t polarity = 1;  // +1 or -1
};

// Canonical ordering: time, then (y, x, polarity) to break ties.
bool event_order(const Event& a, const Event& b);

struct EventStream {
  int height = 0;
  int width = 0;
  double t_start = 0.0;
  double t_end = 0.0;
  std::vector<Event> events;

  size_t size() const { return events.size(); }
  // Throws DataError naming the first offending event index.
  void validate() const;
  void sort_canonical();
};

struct EventVoxelGrid {
  int bins = 0;
  int height = 0;
  int width = 0;
  std::vector<float> values;  // bins * height * width, row-major

  float& at(int b, int y, int x) { return values[(static_cast<size_t>(b) * height + y) * width + x]; }
  float at(int b, int y, int x) const { return values[(static_cast<size_t>(b) * height + y) * width + x]; }
  double signed_mass() const;
};

struct SimulatorConfig {
  double contrast_threshold = 0.2;  // symmetric for both polarities
  double threshold_jitter_sigma = 0.0;  // per-event Gaussian jitter, off by default
};

// Ideal event camera over a log-brightness video: per pixel, linear
// interpolation in time, an event each time the signal crosses a multiple
// of the threshold away from the reference level, reference updated to the
// crossed level. Frames are row-major H*W, one per timestamp.
EventStream simulate_events(const std::vector<std::vector<double>>& log_frames,
                            const std::vector<double>& timestamps, int height, int width,
                            const SimulatorConfig& cfg, Rng& rng);

// Splits a [0,1]-normalized stream at tau: events with t <= tau stay as the
// forward stream over [0, tau]; the rest are time-reversed (t -> 1 - t) with
// polarities flipped, giving a stream over [0, 1 - tau].
struct SplitStreams {
  EventStream forward;
  EventStream backward_reversed;
};
SplitStreams split_and_reverse(const EventStream& stream, double tau);

// Reverses a whole stream over its own span (t -> span_end+span_start-t, p -> -p).
EventStream reverse_stream(const EventStream& stream);

// Bilinear splatting over normalized bin coordinates t* = (t-t0)/(t1-t0)*(B-1).
// A zero-duration span puts all mass in bin 0.
EventVoxelGrid voxelize(const EventStream& stream, int bins);

// Event file: "C3RE", version u32, H u16, W u16, t_start f64, t_end f64,
// count u64, then per event: t f64, x u16, y u16, polarity i8.
inline constexpr uint32_t kEventFileVersion = 1;
void write_events(const std::string& path, const EventStream& stream);
EventStream read_events(const std::string& path);

}  // namespace c3r
