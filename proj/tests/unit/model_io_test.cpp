#include <gtest/gtest.h>

#include <filesystem>

#include "cxr/neural/model_io.hpp"
#include "cxr/neural/train.hpp"
#include "cxr/neural/unet.hpp"

using namespace cxr::neural;

TEST(ModelIo, RoundTripPreservesEverything) {
  const auto net = Network<float>::build(mini(), {1, 32, 32}, 77);
  const nlohmann::json prov{{"stage", "encode-train"}, {"seed", 77}};
  const auto bytes = serialize_model(net, prov);
  ASSERT_EQ(std::string(bytes.begin(), bytes.begin() + 8), "CXRMODEL");
  const auto loaded = deserialize_model(bytes);
  EXPECT_EQ(loaded.network.arch(), net.arch());
  EXPECT_EQ(loaded.network.input_shape(), net.input_shape());
  EXPECT_EQ(loaded.network.parameters(), net.parameters());
  EXPECT_EQ(loaded.provenance, prov);
  EXPECT_EQ(serialize_model(loaded.network, prov), bytes);
}

TEST(ModelIo, UNetArchitectureSurvives) {
  const auto net = build_unet({3, 4, 16}, 2);
  const auto loaded = deserialize_model(serialize_model(net));
  EXPECT_EQ(loaded.network.arch(), net.arch());
  EXPECT_EQ(loaded.network.parameters(), net.parameters());
}

TEST(ModelIo, FileRoundTrip) {
  const auto dir = std::filesystem::temp_directory_path() / "cxr_model_io_test";
  std::filesystem::remove_all(dir);
  const auto net = Network<float>::build(mini(), {1, 32, 32}, 5);
  save_model(dir / "nested" / "m.bin", net);
  EXPECT_EQ(load_model(dir / "nested" / "m.bin").network.parameters(), net.parameters());
  std::filesystem::remove_all(dir);
}

TEST(ModelIo, CorruptionIsReportedWithOffset) {
  const auto net = Network<float>::build(ArchSpec{"fc", {LayerSpec::fc(2)}, {}}, {3}, 5);
  auto bytes = serialize_model(net);
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  try {
    deserialize_model(bad_magic);
    FAIL();
  } catch (const cxr::FormatError& e) {
    EXPECT_EQ(e.offset, 0u);
  }
  auto bad_version = bytes;
  bad_version[8] = 9;
  try {
    deserialize_model(bad_version);
    FAIL();
  } catch (const cxr::FormatError& e) {
    EXPECT_EQ(e.offset, 8u);
  }
  bytes.pop_back();
  EXPECT_THROW(deserialize_model(bytes), cxr::FormatError);
}

TEST(ModelIo, ImportCopiesWeightsAndRejectsMismatch) {
  const auto source = Network<float>::build(mini(), {1, 32, 32}, 1);
  auto target = Network<float>::build(mini(), {1, 32, 32}, 2);
  const auto version = target.version();
  import_parameters(target, serialize_model(source));
  EXPECT_EQ(target.parameters(), source.parameters());
  EXPECT_GT(target.version(), version);

  auto other = build_unet({2, 4, 16}, 1);
  const auto before = other.parameters();
  EXPECT_THROW(import_parameters(other, serialize_model(source)), cxr::FormatError);
  EXPECT_EQ(other.parameters(), before);
}

TEST(ModelIo, LoadedModelEncodesIdentically) {
  const auto net = Network<float>::build(mini(), {1, 32, 32}, 8);
  const auto loaded = deserialize_model(serialize_model(net));
  Tensor<float> img({1, 32, 32}, 0.3f);
  for (std::size_t k = 0; k < img.size(); k += 7) img[k] = 0.9f;
  EXPECT_EQ(encode(loaded.network, img), encode(net, img));
}
