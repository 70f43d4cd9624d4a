#include "tcge/sweep_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <regex>
#include <sstream>
#include <stdexcept>

namespace tcge {

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, sep)) out.push_back(field);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

template <typename T>
T parse_field(const std::string& text, const std::string& where) {
  T value{};
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) throw std::runtime_error("bad number '" + text + "' in " + where);
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(value)) throw std::runtime_error("non-finite number in " + where);
  }
  return value;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

}  // namespace

std::string format_number(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw std::runtime_error("number formatting failed");
  return std::string(buf, ptr);
}

std::string sweep_file_name(int size) { return "sweep_L" + std::to_string(size) + ".csv"; }

std::optional<int> size_from_sweep_file(const std::string& name) {
  static const std::regex pattern(R"(sweep_L([0-9]+)\.csv)");
  std::smatch m;
  if (!std::regex_match(name, m, pattern)) return std::nullopt;
  return std::stoi(m[1].str());
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  out.close();
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_sweep_csv(const std::filesystem::path& path, const SweepSeries& series) {
  std::string text = std::string(kSweepHeader) + "\n";
  for (const auto& r : series.rows) {
    for (double v : {r.beta, r.e, r.e_err, r.ge, r.ge_err, r.ge_tilde, r.ge_tilde_err, r.q, r.q_err,
                     r.dge_tilde_dbeta, r.dge_tilde_dbeta_err}) {
      text += format_number(v);
      text += ',';
    }
    text += std::to_string(r.n_measure) + ',' + std::to_string(r.seed) + '\n';
  }
  write_text(path, text);
}

SweepSeries read_sweep_csv(const std::filesystem::path& path, int size) {
  const auto lines = read_lines(path);
  if (lines.empty() || lines.front() != kSweepHeader) {
    throw std::runtime_error(path.string() + ": missing or wrong sweep header");
  }
  SweepSeries series;
  series.size = size;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::string where = path.string() + ":" + std::to_string(i + 1);
    const auto f = split(lines[i], ',');
    if (f.size() != 13) throw std::runtime_error(where + ": expected 13 fields");
    SweepRow r;
    double* slots[] = {&r.beta, &r.e, &r.e_err, &r.ge, &r.ge_err, &r.ge_tilde, &r.ge_tilde_err,
                       &r.q, &r.q_err, &r.dge_tilde_dbeta, &r.dge_tilde_dbeta_err};
    for (std::size_t k = 0; k < 11; ++k) *slots[k] = parse_field<double>(f[k], where);
    r.n_measure = parse_field<std::int64_t>(f[11], where);
    r.seed = parse_field<std::uint64_t>(f[12], where);
    series.rows.push_back(r);
  }
  try {
    series.validate();
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
  return series;
}

void write_fee_csv(const std::filesystem::path& path, std::span<const FeePoint> profile) {
  std::string text = std::string(kFeeHeader) + "\n";
  for (const auto& p : profile) {
    text += format_number(p.r) + ',' + format_number(p.f) + ',' + format_number(p.error) + ',' +
            std::to_string(p.n_classes) + '\n';
  }
  write_text(path, text);
}

std::vector<FeePoint> read_fee_csv(const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  if (lines.empty() || lines.front() != kFeeHeader) {
    throw std::runtime_error(path.string() + ": missing or wrong correlation header");
  }
  std::vector<FeePoint> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::string where = path.string() + ":" + std::to_string(i + 1);
    const auto f = split(lines[i], ',');
    if (f.size() != 4) throw std::runtime_error(where + ": expected 4 fields");
    out.push_back({parse_field<double>(f[0], where), parse_field<double>(f[1], where),
                   parse_field<double>(f[2], where), parse_field<int>(f[3], where)});
  }
  return out;
}

}  // namespace tcge
