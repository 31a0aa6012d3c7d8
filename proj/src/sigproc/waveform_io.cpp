#include "dmle2e/sigproc/waveform_io.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

namespace dmle2e::sigproc {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

namespace {
constexpr std::string_view kWaveMagic = "WAVE0001";
}

void append_f64(std::string& out, double v) {
  char buf[8];
  std::memcpy(buf, &v, 8);
  out.append(buf, 8);
}

double read_f64(std::string_view bytes, std::size_t offset) {
  if (offset + 8 > bytes.size()) throw FormatError("unexpected end of binary data");
  double v;
  std::memcpy(&v, bytes.data() + offset, 8);
  return v;
}

void append_u64(std::string& out, std::uint64_t v) {
  char buf[8];
  std::memcpy(buf, &v, 8);
  out.append(buf, 8);
}

std::uint64_t read_u64(std::string_view bytes, std::size_t offset) {
  if (offset + 8 > bytes.size()) throw FormatError("unexpected end of binary data");
  std::uint64_t v;
  std::memcpy(&v, bytes.data() + offset, 8);
  return v;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

std::string encode_waveform(const Waveform& w) {
  std::string out;
  out.reserve(16 + 8 * static_cast<std::size_t>(w.size()));
  out.append(kWaveMagic);
  append_f64(out, w.sample_rate());
  for (Eigen::Index i = 0; i < w.size(); ++i) append_f64(out, w[i]);
  return out;
}

Waveform decode_waveform(std::string_view bytes) {
  if (bytes.size() < 16 || bytes.substr(0, 8) != kWaveMagic) throw FormatError("not a WAVE0001 waveform");
  if ((bytes.size() - 16) % 8 != 0) throw FormatError("waveform payload is truncated");
  const double rate = read_f64(bytes, 8);
  const auto n = static_cast<Eigen::Index>((bytes.size() - 16) / 8);
  if (n < 1) throw FormatError("waveform payload is empty");
  Eigen::VectorXd s(n);
  std::memcpy(s.data(), bytes.data() + 16, static_cast<std::size_t>(n) * 8);
  try {
    return Waveform(std::move(s), rate);
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("invalid waveform contents: ") + e.what());
  }
}

void write_waveform_binary(const std::filesystem::path& path, const Waveform& w) {
  write_file(path, encode_waveform(w));
}

Waveform read_waveform_binary(const std::filesystem::path& path) { return decode_waveform(read_file(path)); }

void write_waveform_csv(const std::filesystem::path& path, const Waveform& w) {
  std::string out;
  char buf[64];
  auto put_double = [&](double v) {
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    out.append(buf, res.ptr);
  };
  out += "# sample_rate_hz=";
  put_double(w.sample_rate());
  out += "\nindex,value\n";
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    out += std::to_string(i);
    out += ',';
    put_double(w[i]);
    out += '\n';
  }
  write_file(path, out);
}

Waveform read_waveform_csv(const std::filesystem::path& path, double fallback_rate_hz) {
  std::istringstream in(read_file(path));
  std::string line;
  double rate = fallback_rate_hz;
  std::vector<double> values;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto pos = line.find("sample_rate_hz=");
      if (pos != std::string::npos) rate = std::stod(line.substr(pos + 15));
      continue;
    }
    if (line.rfind("index", 0) == 0) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw FormatError("malformed CSV row: " + line);
    const auto expected = static_cast<long>(values.size());
    if (std::stol(line.substr(0, comma)) != expected) throw FormatError("CSV indices must be consecutive from 0");
    values.push_back(std::stod(line.substr(comma + 1)));
  }
  if (!(rate > 0.0)) throw FormatError("CSV waveform has no sample rate");
  if (values.empty()) throw FormatError("CSV waveform has no samples");
  return Waveform(Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size())), rate);
}

}  // namespace dmle2e::sigproc
