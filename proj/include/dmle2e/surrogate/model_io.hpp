#ifndef DMLE2E_SURROGATE_MODEL_IO_HPP
#define DMLE2E_SURROGATE_MODEL_IO_HPP

#include <filesystem>
#include <string>
#include <string_view>

#include "dmle2e/surrogate/lstm.hpp"

namespace dmle2e::surrogate {

// Layout: "DMLSUR01" | u64 header length | JSON header | float64 weights
// (w_input, w_hidden, bias, w_out, b_out, each column-major), little-endian.
std::string save_model(const SurrogateModel& m);
SurrogateModel load_model(std::string_view bytes);

void write_model(const std::filesystem::path& path, const SurrogateModel& m);
SurrogateModel read_model(const std::filesystem::path& path);

}  // namespace dmle2e::surrogate

#endif  // DMLE2E_SURROGATE_MODEL_IO_HPP
