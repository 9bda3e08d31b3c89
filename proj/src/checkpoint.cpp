#include "empmp/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <zlib.h>

namespace empmp {

static_assert(std::endian::native == std::endian::little,
              "checkpoint payload assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'E', 'M', 'P', 'M'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ostream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in, const std::string& path) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw ParseError(path + ": truncated checkpoint");
  return value;
}

void write_string(std::ostream& out, const std::string& s) {
  write_pod(out, static_cast<std::uint16_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& in, const std::string& path) {
  const std::uint16_t len = read_pod<std::uint16_t>(in, path);
  std::string s(len, '\0');
  in.read(s.data(), len);
  if (!in) throw ParseError(path + ": truncated checkpoint");
  return s;
}

std::uint32_t payload_crc(const double* data, std::size_t count) {
  return static_cast<std::uint32_t>(
      crc32(0u, reinterpret_cast<const Bytef*>(data),
            static_cast<uInt>(count * sizeof(double))));
}

void write_record(std::ostream& out, const std::string& name, const Shape& shape,
                  const double* data, std::size_t count) {
  write_string(out, name);
  write_pod(out, static_cast<std::uint8_t>(shape.size()));
  for (int d : shape) write_pod(out, static_cast<std::int32_t>(d));
  out.write(reinterpret_cast<const char*>(data),
            static_cast<std::streamsize>(count * sizeof(double)));
  write_pod(out, payload_crc(data, count));
}

void read_record_into(std::istream& in, const std::string& path,
                      const std::string& expect_name, const Shape& expect_shape,
                      double* data, std::size_t count) {
  const std::string name = read_string(in, path);
  if (name != expect_name)
    throw ParseError(path + ": record '" + name + "' where '" + expect_name +
                     "' was expected (layout mismatch)");
  const std::uint8_t rank = read_pod<std::uint8_t>(in, path);
  Shape shape;
  for (std::uint8_t i = 0; i < rank; ++i)
    shape.push_back(read_pod<std::int32_t>(in, path));
  if (shape != expect_shape)
    throw ParseError(path + ": record '" + name + "' has shape " + shape_str(shape) +
                     ", expected " + shape_str(expect_shape));
  in.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(count * sizeof(double)));
  if (!in) throw ParseError(path + ": truncated checkpoint");
  const std::uint32_t crc = read_pod<std::uint32_t>(in, path);
  if (crc != payload_crc(data, count))
    throw ParseError(path + ": CRC mismatch in record '" + name + "'");
}

void write_config(std::ostream& out, const ModelConfig& c) {
  for (int v : {c.joints, c.persons, c.frames_in, c.frames_out, c.channels, c.stages,
                c.local_iters, c.global_iters, c.hip_index})
    write_pod(out, static_cast<std::int32_t>(v));
  write_pod(out, c.alpha);
  write_pod(out, c.norm_eps);
  write_pod(out, static_cast<std::uint8_t>(c.spatial_update ? 1 : 0));
  write_pod(out, static_cast<std::uint8_t>(c.local_norm_axis == LocalNormAxis::kChannel ? 0 : 1));
  write_pod(out, static_cast<std::uint8_t>(c.global_norm_axis == GlobalNormAxis::kMerged ? 0 : 1));
  write_pod(out, c.seed);
}

ModelConfig read_config(std::istream& in, const std::string& path) {
  ModelConfig c;
  c.joints = read_pod<std::int32_t>(in, path);
  c.persons = read_pod<std::int32_t>(in, path);
  c.frames_in = read_pod<std::int32_t>(in, path);
  c.frames_out = read_pod<std::int32_t>(in, path);
  c.channels = read_pod<std::int32_t>(in, path);
  c.stages = read_pod<std::int32_t>(in, path);
  c.local_iters = read_pod<std::int32_t>(in, path);
  c.global_iters = read_pod<std::int32_t>(in, path);
  c.hip_index = read_pod<std::int32_t>(in, path);
  c.alpha = read_pod<double>(in, path);
  c.norm_eps = read_pod<double>(in, path);
  c.spatial_update = read_pod<std::uint8_t>(in, path) != 0;
  c.local_norm_axis = read_pod<std::uint8_t>(in, path) == 0 ? LocalNormAxis::kChannel
                                                            : LocalNormAxis::kTemporal;
  c.global_norm_axis = read_pod<std::uint8_t>(in, path) == 0 ? GlobalNormAxis::kMerged
                                                             : GlobalNormAxis::kChannel;
  c.seed = read_pod<std::uint64_t>(in, path);
  try {
    c.validate();
  } catch (const ConfigError& e) {
    throw ParseError(path + ": invalid checkpoint config: " + e.what());
  }
  return c;
}

}  // namespace

void save_checkpoint(const std::string& path, const EmpmpModel& model,
                     const AdamState* optimizer, CheckpointMeta meta) {
  if (optimizer && !optimizer->matches(model))
    throw ContractError("save_checkpoint: optimizer state does not match the model");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint to " + path);

  out.write(kMagic, sizeof(kMagic));
  write_pod(out, kVersion);
  write_config(out, model.config());
  if (optimizer) meta.optimizer_step = optimizer->step;
  write_pod(out, meta.completed_epochs);
  write_pod(out, meta.optimizer_step);
  write_pod(out, static_cast<std::uint8_t>(optimizer ? 1 : 0));

  std::uint32_t records = 0;
  model.for_each_parameter([&](const std::string&, const Tensor&) { ++records; });
  if (optimizer) records *= 3;
  write_pod(out, records);

  model.for_each_parameter([&](const std::string& name, const Tensor& t) {
    write_record(out, name, t.shape(), t.values().data(), t.size());
  });
  if (optimizer) {
    std::size_t i = 0;
    model.for_each_parameter([&](const std::string& name, const Tensor& t) {
      write_record(out, "opt.m." + name, t.shape(), optimizer->m[i].data(), t.size());
      write_record(out, "opt.v." + name, t.shape(), optimizer->v[i].data(), t.size());
      ++i;
    });
  }
  if (!out) throw IoError("failed writing checkpoint to " + path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read checkpoint from " + path);

  char magic[4];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw ParseError(path + ": not an EMPM checkpoint");
  const std::uint32_t version = read_pod<std::uint32_t>(in, path);
  if (version != kVersion)
    throw ParseError(path + ": unsupported checkpoint version " + std::to_string(version));

  const ModelConfig config = read_config(in, path);
  CheckpointMeta meta;
  meta.completed_epochs = read_pod<std::uint32_t>(in, path);
  meta.optimizer_step = read_pod<std::uint64_t>(in, path);
  const bool has_optimizer = read_pod<std::uint8_t>(in, path) != 0;
  const std::uint32_t records = read_pod<std::uint32_t>(in, path);

  EmpmpModel model(config);
  std::uint32_t expect = 0;
  model.for_each_parameter([&](const std::string&, const Tensor&) { ++expect; });
  if (has_optimizer) expect *= 3;
  if (records != expect)
    throw ParseError(path + ": checkpoint lists " + std::to_string(records) +
                     " records, config implies " + std::to_string(expect));

  model.for_each_parameter([&](const std::string& name, Tensor& t) {
    read_record_into(in, path, name, t.shape(), t.values_mut().data(), t.size());
  });

  std::optional<AdamState> opt;
  if (has_optimizer) {
    AdamState state(model);
    state.step = meta.optimizer_step;
    std::size_t i = 0;
    model.for_each_parameter([&](const std::string& name, Tensor& t) {
      read_record_into(in, path, "opt.m." + name, t.shape(), state.m[i].data(), t.size());
      read_record_into(in, path, "opt.v." + name, t.shape(), state.v[i].data(), t.size());
      ++i;
    });
    opt = std::move(state);
  }

  char extra;
  if (in.read(&extra, 1)) throw ParseError(path + ": trailing bytes after records");
  return LoadedCheckpoint{std::move(model), std::move(opt), meta};
}

}  // namespace empmp
