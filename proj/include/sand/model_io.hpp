#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sand/encoder.hpp"
#include "sand/supernet.hpp"

namespace sand {

// Raised when a command needs an artifact that does not exist yet.
class MissingArtifact : public Error {
 public:
  explicit MissingArtifact(const std::string& msg) : Error(msg) {}
};

struct TensorRecord {
  std::string name;
  Matrix value;
};

struct ModelSection {
  std::string name;
  std::vector<TensorRecord> tensors;

  const Matrix* find(const std::string& tensor_name) const;
};

// Versioned, checksummed binary container ("SANDMDL1"): section table,
// named row-major float64 tensors (little-endian), a config snapshot and
// an FNV-1a trailer. Round-trips are bit-exact.
struct ModelContainer {
  std::vector<ModelSection> sections;
  std::string config_snapshot;

  ModelSection* find_section(const std::string& name);
  const ModelSection* find_section(const std::string& name) const;
  // Replaces the section of the same name if present.
  void put_section(ModelSection section);
};

std::vector<uint8_t> serialize_model(const ModelContainer& container);
ModelContainer deserialize_model(const std::vector<uint8_t>& bytes);

void save_model(const ModelContainer& container, const std::string& path);
ModelContainer load_model(const std::string& path);  // throws MissingArtifact / checksum errors

uint64_t fnv1a64(const uint8_t* data, size_t len);

// Encoder and SuperNet adapters.
ModelSection encoder_to_section(const EncoderModel& model);
EncoderModel encoder_from_section(const ModelSection& section);
ModelSection supernet_to_section(const SuperNet& net);
SuperNet supernet_from_section(const ModelSection& section);

}  // namespace sand
