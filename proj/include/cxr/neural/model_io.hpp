#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "json.hpp"

#include "cxr/neural/network.hpp"

namespace cxr::neural {

/// Model container, version 1:
///
///   "CXRMODEL"            8 bytes
///   format version        u32 LE
///   header length N       u64 LE
///   header                N bytes of JSON: arch, input_shape, seed,
///                         provenance, blocks[{layer, name, shape}]
///   parameter blocks      f32 LE, in the order listed by `blocks`
///
/// Blocks follow layer order, weight before bias.
inline constexpr std::uint32_t kModelFormatVersion = 1;

nlohmann::json arch_to_json(const ArchSpec& arch);
ArchSpec arch_from_json(const nlohmann::json& j);

std::vector<std::uint8_t> serialize_model(const Network<float>& net, const nlohmann::json& provenance = nlohmann::json::object());

struct LoadedModel {
  Network<float> network;
  nlohmann::json provenance;
};
LoadedModel deserialize_model(std::span<const std::uint8_t> bytes);

void save_model(const std::filesystem::path& path, const Network<float>& net,
                const nlohmann::json& provenance = nlohmann::json::object());
LoadedModel load_model(const std::filesystem::path& path);

/// Copies parameter blocks from a container into an existing network whose
/// parameter shapes match block for block. Used to bring in externally
/// trained weights; velocity is reset.
void import_parameters(Network<float>& net, std::span<const std::uint8_t> container);

}  // namespace cxr::neural
