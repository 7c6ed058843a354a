#include "c3r/checkpoint.hpp"

#include "c3r/errors.hpp"
#include "c3r/io.hpp"

namespace c3r {

void save_checkpoint(const std::string& path, const std::map<std::string, Tensor>& tensors) {
  ByteWriter w;
  w.magic("C3RT");
  w.u32(kCheckpointVersion);
  w.u32(static_cast<uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    w.u16(static_cast<uint16_t>(name.size()));
    w.bytes(name.data(), name.size());
    w.u8(static_cast<uint8_t>(t.rank()));
    for (int d = 0; d < t.rank(); ++d) w.u32(static_cast<uint32_t>(t.dim(d)));
    w.bytes(t.values().data(), t.values().size() * sizeof(float));
  }
  write_file(path, w.data());
}

std::map<std::string, Tensor> load_checkpoint(const std::string& path) {
  auto raw = read_file(path);
  ByteReader r(raw.data(), raw.size(), path);
  r.expect_magic("C3RT");
  const uint32_t version = r.u32();
  if (version != kCheckpointVersion)
    r.fail("unsupported checkpoint version " + std::to_string(version));
  const uint32_t count = r.u32();
  std::map<std::string, Tensor> out;
  for (uint32_t i = 0; i < count; ++i) {
    const uint16_t name_len = r.u16();
    std::string name(name_len, '\0');
    r.bytes(name.data(), name_len);
    const uint8_t rank = r.u8();
    Shape shape(rank);
    for (uint8_t d = 0; d < rank; ++d) shape[d] = static_cast<int>(r.u32());
    const int64_t n = shape_numel(shape);
    std::vector<float> vals(static_cast<size_t>(n));
    r.bytes(vals.data(), vals.size() * sizeof(float));
    if (out.count(name)) r.fail("duplicate tensor name '" + name + "'");
    out.emplace(name, Tensor::from_values(std::move(shape), std::move(vals)));
  }
  if (r.remaining() != 0) r.fail("trailing bytes after last tensor");
  return out;
}

}  // namespace c3r
