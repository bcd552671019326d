#include "vibcnn/checkpoint.hpp"

#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

#include "binio.hpp"

namespace vibcnn {

namespace {

struct TensorRef {
  std::string name;
  std::vector<std::uint32_t> dims;
  float* data;
  std::size_t count;
};

std::vector<std::uint32_t> t3_dims(const Tensor3T<float>& t) {
  return {static_cast<std::uint32_t>(t.batch),
          static_cast<std::uint32_t>(t.channels),
          static_cast<std::uint32_t>(t.length)};
}

// Every model tensor with its serialized name, in file order. Running
// statistics ride along (they are state the eval phase needs) even though
// they are not trainable parameters.
std::vector<TensorRef> param_tensor_refs(ModelParamsT<float>& p) {
  std::vector<TensorRef> refs;
  const auto add1 = [&](const std::string& name, std::vector<float>& v) {
    refs.push_back({name,
                    {static_cast<std::uint32_t>(v.size())},
                    v.data(),
                    v.size()});
  };
  const auto add_bn = [&](const std::string& prefix, BatchNormStateT<float>& bn) {
    add1(prefix + ".gamma", bn.gamma);
    add1(prefix + ".beta", bn.beta);
    add1(prefix + ".running_mean", bn.running_mean);
    add1(prefix + ".running_var", bn.running_var);
  };
  refs.push_back({"conv1_w", t3_dims(p.conv1_w), p.conv1_w.data.data(),
                  p.conv1_w.size()});
  add_bn("bn1", p.bn1);
  refs.push_back({"conv2_w", t3_dims(p.conv2_w), p.conv2_w.data.data(),
                  p.conv2_w.size()});
  add_bn("bn2", p.bn2);
  refs.push_back({"conv3_w", t3_dims(p.conv3_w), p.conv3_w.data.data(),
                  p.conv3_w.size()});
  add_bn("bn3", p.bn3);
  refs.push_back({"conv_sc_w", t3_dims(p.conv_sc_w), p.conv_sc_w.data.data(),
                  p.conv_sc_w.size()});
  add_bn("bn_sc", p.bn_sc);
  refs.push_back({"fc_w",
                  {static_cast<std::uint32_t>(p.fc_w.rows),
                   static_cast<std::uint32_t>(p.fc_w.cols)},
                  p.fc_w.data.data(),
                  p.fc_w.size()});
  add1("fc_b", p.fc_b);
  return refs;
}

std::vector<float> arch_values(const ModelDims& d) {
  return {static_cast<float>(d.in_channels), static_cast<float>(d.in_len),
          static_cast<float>(d.conv1_filters), static_cast<float>(d.conv1_kernel),
          static_cast<float>(d.conv1_stride), static_cast<float>(d.pool_k),
          static_cast<float>(d.pool_stride), static_cast<float>(d.res_filters),
          static_cast<float>(d.res_kernel), static_cast<float>(d.classes)};
}

void write_tensor(binio::Writer& w, const std::string& name,
                  const std::vector<std::uint32_t>& dims, const float* data,
                  std::size_t count) {
  w.u16(static_cast<std::uint16_t>(name.size()));
  w.bytes(name.data(), name.size());
  w.u8(static_cast<std::uint8_t>(dims.size()));
  for (std::uint32_t d : dims) w.u32(d);
  for (std::size_t i = 0; i < count; ++i) w.f32(data[i]);
}

struct RawTensor {
  std::vector<std::uint32_t> dims;
  std::vector<float> values;
  std::uint64_t offset;  // of the tensor header, for diagnostics
};

int arch_int(const RawTensor& arch, std::size_t i) {
  const float v = arch.values[i];
  if (!std::isfinite(v) || v != std::floor(v) || v < -1e6f || v > 1e6f)
    throw FormatError("arch entry " + std::to_string(i) + " is not an integer",
                      arch.offset);
  return static_cast<int>(v);
}

}  // namespace

void save_checkpoint(const ModelParamsT<float>& params, const AdamState* adam,
                     const std::string& path) {
  // Refs only read; the serialized view needs mutable spans for the loader.
  auto& p = const_cast<ModelParamsT<float>&>(params);
  auto refs = param_tensor_refs(p);

  std::uint16_t count = static_cast<std::uint16_t>(1 + refs.size());
  const auto slots = trainable_slots(p);
  if (adam) count += static_cast<std::uint16_t>(2 * slots.size() + 1);

  binio::Writer w(path);
  w.bytes("VCK1", 4);
  w.u16(1);  // version
  w.u16(count);

  const auto arch = arch_values(params.dims);
  write_tensor(w, "arch", {static_cast<std::uint32_t>(arch.size())},
               arch.data(), arch.size());
  for (const auto& r : refs) write_tensor(w, r.name, r.dims, r.data, r.count);

  if (adam) {
    if (adam->m.size() != slots.size() || adam->v.size() != slots.size())
      throw ConfigError("optimizer state does not match the parameter layout");
    for (std::size_t i = 0; i < slots.size(); ++i) {
      if (adam->m[i].size() != slots[i].values.size())
        throw ConfigError(std::string("optimizer moment size mismatch for ") +
                          slots[i].name);
      write_tensor(w, std::string("adam.m.") + slots[i].name,
                   {static_cast<std::uint32_t>(adam->m[i].size())},
                   adam->m[i].data(), adam->m[i].size());
      write_tensor(w, std::string("adam.v.") + slots[i].name,
                   {static_cast<std::uint32_t>(adam->v[i].size())},
                   adam->v[i].data(), adam->v[i].size());
    }
    const float t = static_cast<float>(adam->t);
    write_tensor(w, "adam.t", {1}, &t, 1);
  }
  w.close();
}

Checkpoint load_checkpoint(const std::string& path) {
  binio::Reader r(path);
  if (r.str(4) != "VCK1") throw FormatError("bad magic (expected VCK1)", 0);
  const std::uint16_t version = r.u16();
  if (version != 1)
    throw FormatError("unsupported version " + std::to_string(version), 4);
  const std::uint16_t count = r.u16();

  std::map<std::string, RawTensor> tensors;
  for (std::uint16_t i = 0; i < count; ++i) {
    const std::uint64_t header_at = r.offset();
    const std::uint16_t name_len = r.u16();
    const std::string name = r.str(name_len);
    const std::uint8_t rank = r.u8();
    if (rank == 0 || rank > 4)
      throw FormatError("tensor '" + name + "' has unsupported rank " +
                            std::to_string(rank),
                        header_at);
    RawTensor t;
    t.offset = header_at;
    std::uint64_t total = 1;
    for (int d = 0; d < rank; ++d) {
      const std::uint32_t dim = r.u32();
      if (dim == 0 || total * dim > (1u << 28))
        throw FormatError("tensor '" + name + "' has invalid extent", header_at);
      t.dims.push_back(dim);
      total *= dim;
    }
    t.values.resize(total);
    for (auto& v : t.values) v = r.f32();
    if (!tensors.emplace(name, std::move(t)).second)
      throw FormatError("duplicate tensor '" + name + "'", header_at);
  }
  if (!r.at_end())
    throw FormatError("trailing bytes after declared tensors", r.offset());

  const auto arch_it = tensors.find("arch");
  if (arch_it == tensors.end())
    throw FormatError("missing 'arch' tensor", r.offset());
  const RawTensor& arch = arch_it->second;
  if (arch.values.size() != 10)
    throw FormatError("'arch' must hold 10 entries", arch.offset);

  ModelDims dims;
  dims.in_channels = arch_int(arch, 0);
  dims.in_len = arch_int(arch, 1);
  dims.conv1_filters = arch_int(arch, 2);
  dims.conv1_kernel = arch_int(arch, 3);
  dims.conv1_stride = arch_int(arch, 4);
  dims.pool_k = arch_int(arch, 5);
  dims.pool_stride = arch_int(arch, 6);
  dims.res_filters = arch_int(arch, 7);
  dims.res_kernel = arch_int(arch, 8);
  dims.classes = arch_int(arch, 9);
  try {
    dims.validate();
  } catch (const ConfigError& e) {
    throw FormatError(std::string("invalid arch: ") + e.what(), arch.offset);
  }

  Checkpoint ck{ModelParamsT<float>::allocate(dims), std::nullopt};
  bool saw_adam = false;
  for (auto& r2 : param_tensor_refs(ck.params)) {
    const auto it = tensors.find(r2.name);
    if (it == tensors.end())
      throw FormatError("missing tensor '" + r2.name + "'", r.offset());
    if (it->second.dims != r2.dims)
      throw FormatError("tensor '" + r2.name + "' has wrong shape",
                        it->second.offset);
    std::copy(it->second.values.begin(), it->second.values.end(), r2.data);
    tensors.erase(it);
  }
  for (const auto& [name, t] : tensors)
    if (name.rfind("adam.", 0) == 0)
      saw_adam = true;
    else if (name != "arch")
      throw FormatError("unknown tensor '" + name + "'", t.offset);

  if (saw_adam) {
    AdamState adam = AdamState::init(ck.params);
    const auto slots = trainable_slots(ck.params);
    for (std::size_t i = 0; i < slots.size(); ++i) {
      for (const char* kind : {"m", "v"}) {
        const std::string name =
            std::string("adam.") + kind + "." + slots[i].name;
        const auto it = tensors.find(name);
        if (it == tensors.end())
          throw FormatError("missing tensor '" + name + "'", r.offset());
        if (it->second.values.size() != slots[i].values.size())
          throw FormatError("tensor '" + name + "' has wrong shape",
                            it->second.offset);
        auto& dst = (kind[0] == 'm') ? adam.m[i] : adam.v[i];
        dst = it->second.values;
      }
    }
    const auto it = tensors.find("adam.t");
    if (it == tensors.end())
      throw FormatError("missing tensor 'adam.t'", r.offset());
    if (it->second.values.size() != 1 || it->second.values[0] < 0.0f ||
        it->second.values[0] != std::floor(it->second.values[0]))
      throw FormatError("'adam.t' must be one nonnegative integer",
                        it->second.offset);
    adam.t = static_cast<std::int64_t>(it->second.values[0]);
    ck.adam = std::move(adam);
  }
  return ck;
}

}  // namespace vibcnn
