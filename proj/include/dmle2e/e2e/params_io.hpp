#ifndef DMLE2E_E2E_PARAMS_IO_HPP
#define DMLE2E_E2E_PARAMS_IO_HPP

#include <filesystem>
#include <string>
#include <string_view>

#include "dmle2e/e2e/train.hpp"

namespace dmle2e::e2e {

/// Human-readable form; doubles printed with round-trip precision.
std::string params_to_json(const AeParams& p);
AeParams params_from_json(std::string_view text);

// Layout: "DMLAEP01" | u64 header length | JSON header (sizes, fixed settings) |
// float64 trainable entries in declaration order, little-endian.
std::string save_params(const AeParams& p);
AeParams load_params(std::string_view bytes);

void write_params(const std::filesystem::path& path, const AeParams& p);
AeParams read_params(const std::filesystem::path& path);

std::string report_to_json(const TrainReport& r);

}  // namespace dmle2e::e2e

#endif  // DMLE2E_E2E_PARAMS_IO_HPP
