#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>

#include "sand/model_io.hpp"
#include "sand/rng.hpp"

using namespace sand;

namespace {

Matrix rnd(size_t r, size_t c, uint64_t seed) {
  Rng rng(seed);
  Matrix m(r, c);
  for (double& v : m.data) v = rng.next_symmetric(1.0);
  return m;
}

ModelContainer sample_container() {
  ModelContainer c;
  c.config_snapshot = "seed = 7\n";
  ModelSection enc;
  enc.name = "encoder";
  enc.tensors.push_back({"w", rnd(3, 4, 1)});
  enc.tensors.push_back({"b", rnd(1, 4, 2)});
  c.sections.push_back(std::move(enc));
  return c;
}

}  // namespace

TEST_CASE("serialize/deserialize/reserialize is bit-exact") {
  ModelContainer c = sample_container();
  auto bytes = serialize_model(c);
  ModelContainer back = deserialize_model(bytes);
  auto bytes2 = serialize_model(back);
  CHECK(bytes == bytes2);
  CHECK(back.config_snapshot == c.config_snapshot);
  REQUIRE(back.sections.size() == 1);
  CHECK(back.sections[0].tensors[0].value == c.sections[0].tensors[0].value);
}

TEST_CASE("truncated and corrupted files are rejected whole") {
  ModelContainer c = sample_container();
  auto bytes = serialize_model(c);

  auto truncated = bytes;
  truncated.resize(bytes.size() - 9);
  CHECK_THROWS_AS(deserialize_model(truncated), Error);

  auto flipped = bytes;
  flipped[20] ^= 0x40;
  CHECK_THROWS_AS(deserialize_model(flipped), Error);

  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  CHECK_THROWS_AS(deserialize_model(bad_magic), Error);
}

TEST_CASE("save/load round-trip through a file, missing file is MissingArtifact") {
  std::string path = "test_model_io.sandmdl";
  ModelContainer c = sample_container();
  save_model(c, path);
  ModelContainer back = load_model(path);
  CHECK(serialize_model(back) == serialize_model(c));
  std::remove(path.c_str());
  CHECK_THROWS_AS(load_model(path), MissingArtifact);
}

TEST_CASE("encoder and supernet sections load independently") {
  EncoderModel enc = EncoderModel::init({}, 3);
  SuperNet net = build_supernet(32, 4);
  net.active_mask[2][3] = 0;

  ModelContainer c;
  c.put_section(encoder_to_section(enc));
  c.put_section(supernet_to_section(net));
  auto bytes = serialize_model(c);
  ModelContainer back = deserialize_model(bytes);

  EncoderModel enc2 = encoder_from_section(*back.find_section("encoder"));
  CHECK(enc2.w1.value == enc.w1.value);
  CHECK(enc2.wp.value == enc.wp.value);
  CHECK(enc2.dims.dz == enc.dims.dz);

  SuperNet net2 = supernet_from_section(*back.find_section("supernet"));
  CHECK(net2.active_mask == net.active_mask);
  CHECK(net2.head_w.value == net.head_w.value);
  for (size_t l = 0; l < kSupernetLayers; ++l)
    for (size_t cc = 0; cc < kCellsPerLayer; ++cc)
      CHECK(net2.layers[l][cc].weight.value == net.layers[l][cc].weight.value);
}

TEST_CASE("put_section replaces by name") {
  ModelContainer c = sample_container();
  ModelSection enc;
  enc.name = "encoder";
  enc.tensors.push_back({"w", rnd(2, 2, 9)});
  c.put_section(enc);
  CHECK(c.sections.size() == 1);
  CHECK(c.sections[0].tensors.size() == 1);
}

TEST_CASE("duplicate names are rejected at serialization") {
  ModelContainer c = sample_container();
  c.sections[0].tensors.push_back({"w", rnd(1, 1, 5)});
  CHECK_THROWS_AS(serialize_model(c), Error);
}
