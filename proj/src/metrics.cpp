#include "ligs/metrics.hpp"

#include <charconv>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "ligs/config.hpp"

namespace ligs {
namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

template <typename T>
bool parse_field(const std::string& s, T& out) {
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

bool parse_row(const std::string& line, MetricsRow& row) {
  const auto f = split_csv(line);
  if (f.size() != 6) return false;
  return parse_field(f[0], row.step) && parse_field(f[1], row.episode_return_extrinsic) &&
         parse_field(f[2], row.episode_return_intrinsic) &&
         parse_field(f[3], row.switch_activations) && parse_field(f[4], row.win_or_success) &&
         (row.win_or_success == 0 || row.win_or_success == 1) && parse_field(f[5], row.wall_seed);
}

}  // namespace

void emit_metrics(std::ostream& sink, const MetricsRow& row) {
  sink << row.step << ',' << format_real(row.episode_return_extrinsic) << ','
       << format_real(row.episode_return_intrinsic) << ',' << row.switch_activations << ','
       << row.win_or_success << ',' << row.wall_seed << '\n';
  if (!sink) throw std::runtime_error("metrics write failed");
}

MetricsWriter::MetricsWriter(const std::filesystem::path& path) : path_(path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  out_.open(path, std::ios::out | std::ios::trunc);
  if (!out_) throw std::runtime_error("cannot open metrics file '" + path.string() + "'");
  out_ << kMetricsHeader << '\n';
  out_.flush();
}

void MetricsWriter::write(const MetricsRow& row) {
  try {
    emit_metrics(out_, row);
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(std::string(e.what()) + " for '" + path_.string() + "'");
  }
  out_.flush();
}

std::vector<MetricsRow> read_metrics(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open metrics file '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line) || line != kMetricsHeader) {
    throw std::runtime_error("bad metrics header in '" + path.string() + "'");
  }
  std::vector<MetricsRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    MetricsRow row;
    if (!parse_row(line, row)) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": malformed row");
    }
    rows.push_back(row);
  }
  return rows;
}

std::vector<std::string> validate_metrics(const std::filesystem::path& path) {
  std::vector<std::string> problems;
  std::ifstream in(path);
  if (!in) return {"cannot open '" + path.string() + "'"};
  std::string line;
  if (!std::getline(in, line) || line != kMetricsHeader) {
    problems.push_back("line 1: header must be '" + std::string(kMetricsHeader) + "'");
  }
  std::size_t line_no = 1;
  bool have_prev = false;
  std::uint64_t prev_step = 0;
  while (std::getline(in, line)) {
    ++line_no;
    MetricsRow row;
    if (!parse_row(line, row)) {
      problems.push_back("line " + std::to_string(line_no) + ": malformed row '" + line + "'");
      continue;
    }
    if (have_prev && row.step < prev_step) {
      problems.push_back("line " + std::to_string(line_no) + ": step " +
                         std::to_string(row.step) + " after step " + std::to_string(prev_step) +
                         " (ordering violation)");
    }
    prev_step = row.step;
    have_prev = true;
  }
  return problems;
}

std::filesystem::path metrics_path(const std::filesystem::path& out_dir,
                                   const std::string& experiment_id, std::uint64_t seed) {
  return out_dir / experiment_id / (std::to_string(seed) + ".csv");
}

}  // namespace ligs
