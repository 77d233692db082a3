#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <string>
#include <vector>

namespace ligs {

inline constexpr const char* kMetricsHeader = "step,ret_ext,ret_int,switches,success,seed";

// One line of a run's metrics file; one row per finished episode.
struct MetricsRow {
  std::uint64_t step = 0;
  double episode_return_extrinsic = 0.0;
  double episode_return_intrinsic = 0.0;
  std::uint64_t switch_activations = 0;
  int win_or_success = 0;
  std::uint64_t wall_seed = 0;

  bool operator==(const MetricsRow&) const = default;
};

// Appends one CSV line (no header). Throws std::runtime_error if the stream
// is in a failed state afterwards.
void emit_metrics(std::ostream& sink, const MetricsRow& row);

// Owns a metrics file: creates parent directories, writes the header, and
// flushes after every row so each episode boundary is on disk.
class MetricsWriter {
 public:
  explicit MetricsWriter(const std::filesystem::path& path);
  void write(const MetricsRow& row);
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

std::vector<MetricsRow> read_metrics(const std::filesystem::path& path);

// Returns one message per problem (bad header, malformed line, step going
// backwards). Empty means the file is valid.
std::vector<std::string> validate_metrics(const std::filesystem::path& path);

// Canonical metrics file location for a run.
std::filesystem::path metrics_path(const std::filesystem::path& out_dir,
                                   const std::string& experiment_id, std::uint64_t seed);

}  // namespace ligs
