#include "sand/model_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <unordered_set>

namespace sand {

namespace {

constexpr char kMagic[8] = {'S', 'A', 'N', 'D', 'M', 'D', 'L', '1'};

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}
void put_u64(std::vector<uint8_t>& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}
void put_f64(std::vector<uint8_t>& out, double d) { put_u64(out, std::bit_cast<uint64_t>(d)); }
void put_str(std::vector<uint8_t>& out, const std::string& s) {
  put_u32(out, static_cast<uint32_t>(s.size()));
  out.insert(out.end(), s.begin(), s.end());
}

struct Reader {
  const std::vector<uint8_t>& buf;
  size_t pos = 0;

  void need(size_t n) const {
    if (pos + n > buf.size()) throw Error("model container truncated");
  }
  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(buf[pos + i]) << (8 * i);
    pos += 4;
    return v;
  }
  uint64_t u64() {
    need(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(buf[pos + i]) << (8 * i);
    pos += 8;
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    uint32_t n = u32();
    need(n);
    std::string s(reinterpret_cast<const char*>(&buf[pos]), n);
    pos += n;
    return s;
  }
};

}  // namespace

uint64_t fnv1a64(const uint8_t* data, size_t len) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (size_t i = 0; i < len; ++i) {
    h ^= data[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

const Matrix* ModelSection::find(const std::string& tensor_name) const {
  for (const TensorRecord& t : tensors)
    if (t.name == tensor_name) return &t.value;
  return nullptr;
}

ModelSection* ModelContainer::find_section(const std::string& name) {
  for (ModelSection& s : sections)
    if (s.name == name) return &s;
  return nullptr;
}
const ModelSection* ModelContainer::find_section(const std::string& name) const {
  for (const ModelSection& s : sections)
    if (s.name == name) return &s;
  return nullptr;
}
void ModelContainer::put_section(ModelSection section) {
  for (ModelSection& s : sections) {
    if (s.name == section.name) {
      s = std::move(section);
      return;
    }
  }
  sections.push_back(std::move(section));
}

std::vector<uint8_t> serialize_model(const ModelContainer& container) {
  std::unordered_set<std::string> section_names;
  for (const ModelSection& s : container.sections) {
    if (!section_names.insert(s.name).second) throw Error("duplicate section '" + s.name + "'");
    std::unordered_set<std::string> tensor_names;
    for (const TensorRecord& t : s.tensors)
      if (!tensor_names.insert(t.name).second)
        throw Error("duplicate tensor '" + t.name + "' in section '" + s.name + "'");
  }

  std::vector<uint8_t> out;
  out.insert(out.end(), kMagic, kMagic + 8);
  put_u64(out, container.sections.size());
  for (const ModelSection& s : container.sections) {
    put_str(out, s.name);
    put_u64(out, s.tensors.size());
    for (const TensorRecord& t : s.tensors) {
      put_str(out, t.name);
      put_u64(out, t.value.rows);
      put_u64(out, t.value.cols);
      for (double d : t.value.data) put_f64(out, d);
    }
  }
  put_str(out, container.config_snapshot);
  put_u64(out, fnv1a64(out.data(), out.size()));
  return out;
}

ModelContainer deserialize_model(const std::vector<uint8_t>& bytes) {
  if (bytes.size() < 16) throw Error("model container truncated");
  if (std::memcmp(bytes.data(), kMagic, 8) != 0) throw Error("unknown model magic/version");
  uint64_t stored = 0;
  for (int i = 0; i < 8; ++i) stored |= static_cast<uint64_t>(bytes[bytes.size() - 8 + i]) << (8 * i);
  if (fnv1a64(bytes.data(), bytes.size() - 8) != stored) throw Error("model checksum mismatch");

  Reader r{bytes, 8};
  ModelContainer c;
  uint64_t n_sections = r.u64();
  for (uint64_t si = 0; si < n_sections; ++si) {
    ModelSection s;
    s.name = r.str();
    uint64_t n_tensors = r.u64();
    for (uint64_t ti = 0; ti < n_tensors; ++ti) {
      TensorRecord t;
      t.name = r.str();
      uint64_t rows = r.u64(), cols = r.u64();
      t.value = Matrix(rows, cols);
      for (size_t i = 0; i < t.value.size(); ++i) t.value.data[i] = r.f64();
      s.tensors.push_back(std::move(t));
    }
    c.sections.push_back(std::move(s));
  }
  c.config_snapshot = r.str();
  return c;
}

void save_model(const ModelContainer& container, const std::string& path) {
  auto bytes = serialize_model(container);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot write '" + path + "'");
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

ModelContainer load_model(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw MissingArtifact("missing model file '" + path + "'");
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return deserialize_model(bytes);
}

ModelSection encoder_to_section(const EncoderModel& model) {
  ModelSection s;
  s.name = "encoder";
  Matrix dims(1, 5);
  dims.data = {static_cast<double>(model.dims.f0), static_cast<double>(model.dims.d1),
               static_cast<double>(model.dims.d2), static_cast<double>(model.dims.d3),
               static_cast<double>(model.dims.dz)};
  s.tensors.push_back({"dims", dims});
  s.tensors.push_back({"w1", model.w1.value});
  s.tensors.push_back({"w2", model.w2.value});
  s.tensors.push_back({"w3", model.w3.value});
  s.tensors.push_back({"wp", model.wp.value});
  s.tensors.push_back({"bp", model.bp.value});
  return s;
}

EncoderModel encoder_from_section(const ModelSection& section) {
  auto need = [&](const char* n) -> const Matrix& {
    const Matrix* m = section.find(n);
    if (!m) throw Error("encoder section missing tensor '" + std::string(n) + "'");
    return *m;
  };
  const Matrix& dims = need("dims");
  EncoderModel m;
  m.dims.f0 = static_cast<size_t>(dims.data[0]);
  m.dims.d1 = static_cast<size_t>(dims.data[1]);
  m.dims.d2 = static_cast<size_t>(dims.data[2]);
  m.dims.d3 = static_cast<size_t>(dims.data[3]);
  m.dims.dz = static_cast<size_t>(dims.data[4]);
  m.w1 = Param(need("w1"), "w1");
  m.w2 = Param(need("w2"), "w2");
  m.w3 = Param(need("w3"), "w3");
  m.wp = Param(need("wp"), "wp");
  m.bp = Param(need("bp"), "bp");
  return m;
}

ModelSection supernet_to_section(const SuperNet& net) {
  ModelSection s;
  s.name = "supernet";
  Matrix meta(1, 1);
  meta.data[0] = static_cast<double>(net.input_len);
  s.tensors.push_back({"input_len", meta});
  Matrix mask(kSupernetLayers, kCellsPerLayer);
  for (size_t l = 0; l < kSupernetLayers; ++l)
    for (size_t c = 0; c < kCellsPerLayer; ++c) mask.at(l, c) = net.active_mask[l][c] ? 1.0 : 0.0;
  s.tensors.push_back({"mask", mask});
  for (size_t l = 0; l < kSupernetLayers; ++l) {
    for (size_t c = 0; c < kCellsPerLayer; ++c) {
      const Cell& cell = net.layers[l][c];
      std::string stem = "l" + std::to_string(l) + "c" + std::to_string(c);
      if (cell.weight.value.size()) s.tensors.push_back({stem + "_w", cell.weight.value});
      if (cell.bias.value.size()) s.tensors.push_back({stem + "_b", cell.bias.value});
    }
  }
  s.tensors.push_back({"head_w", net.head_w.value});
  s.tensors.push_back({"head_b", net.head_b.value});
  return s;
}

SuperNet supernet_from_section(const ModelSection& section) {
  const Matrix* meta = section.find("input_len");
  if (!meta) throw Error("supernet section missing tensor 'input_len'");
  SuperNet net = build_supernet(static_cast<size_t>(meta->data[0]), 0);

  const Matrix* mask = section.find("mask");
  if (!mask) throw Error("supernet section missing tensor 'mask'");
  for (size_t l = 0; l < kSupernetLayers; ++l)
    for (size_t c = 0; c < kCellsPerLayer; ++c) net.active_mask[l][c] = mask->at(l, c) != 0.0 ? 1 : 0;

  for (size_t l = 0; l < kSupernetLayers; ++l) {
    for (size_t c = 0; c < kCellsPerLayer; ++c) {
      Cell& cell = net.layers[l][c];
      std::string stem = "l" + std::to_string(l) + "c" + std::to_string(c);
      if (cell.weight.value.size()) {
        const Matrix* w = section.find(stem + "_w");
        if (!w || !w->same_shape(cell.weight.value)) throw Error("supernet tensor missing/mismatched: " + stem);
        cell.weight.value = *w;
      }
      if (cell.bias.value.size()) {
        const Matrix* b = section.find(stem + "_b");
        if (!b || !b->same_shape(cell.bias.value)) throw Error("supernet tensor missing/mismatched: " + stem);
        cell.bias.value = *b;
      }
    }
  }
  const Matrix* hw = section.find("head_w");
  const Matrix* hb = section.find("head_b");
  if (!hw || !hb) throw Error("supernet section missing head tensors");
  net.head_w.value = *hw;
  net.head_b.value = *hb;
  return net;
}

}  // namespace sand
