#ifndef DMLE2E_SIGPROC_WAVEFORM_IO_HPP
#define DMLE2E_SIGPROC_WAVEFORM_IO_HPP

#include <filesystem>
#include <string>
#include <string_view>

#include "dmle2e/sigproc/types.hpp"

namespace dmle2e::sigproc {

// Binary layout: "WAVE0001" | float64 sample rate | float64 samples..., all little-endian.
std::string encode_waveform(const Waveform& w);
Waveform decode_waveform(std::string_view bytes);

void write_waveform_binary(const std::filesystem::path& path, const Waveform& w);
Waveform read_waveform_binary(const std::filesystem::path& path);

// CSV: optional "# sample_rate_hz=<rate>" line, "index,value" header, one row per sample.
void write_waveform_csv(const std::filesystem::path& path, const Waveform& w);
/// `fallback_rate_hz` is used when the file carries no sample-rate comment.
Waveform read_waveform_csv(const std::filesystem::path& path, double fallback_rate_hz = 0.0);

// Little-endian float64 helpers shared by the other binary formats.
void append_f64(std::string& out, double v);
double read_f64(std::string_view bytes, std::size_t offset);
void append_u64(std::string& out, std::uint64_t v);
std::uint64_t read_u64(std::string_view bytes, std::size_t offset);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

}  // namespace dmle2e::sigproc

#endif  // DMLE2E_SIGPROC_WAVEFORM_IO_HPP
