#pragma once

// Text configuration, CSV output, binary checkpoints and run manifests.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "membrane/dynamics.hpp"

namespace membrane {

// --- configuration -------------------------------------------------------------

// "key = value" lines grouped under "[section]" headers; '#' and ';' start
// comments. Keys are addressed as "section.key" ("key" outside any section).
// Every key must be read by the consumer; leftovers are reported by unused().
class Config {
 public:
  static Config parse(const std::string& text, const std::string& origin = "<string>");
  static Config load(const std::filesystem::path& path);

  // "section.key=value"
  void set(const std::string& assignment);
  void set(const std::string& key, const std::string& value);

  bool has(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  long get_int(const std::string& key, long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_doubles(const std::string& key, const std::vector<double>& fallback) const;

  // Keys never read through a getter.
  std::vector<std::string> unused() const;
  // Throws ValidationError naming the unread keys.
  void reject_unused() const;

  const std::map<std::string, std::string>& entries() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
  mutable std::set<std::string> read_;
};

// Parses "l,m,amplitude[,normal|tangent][,velocity]" entries separated by ';'.
std::vector<ModeSpec> parse_modes(const std::string& text);

// --- CSV -----------------------------------------------------------------------

// Shortest-roundtrip is not required; every float is printed with 17
// significant digits.
std::string format_double(double v);

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);
  void row(const std::vector<double>& values);
  void row_text(const std::vector<std::string>& cells);
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  std::size_t columns_;
};

std::vector<std::string> sample_header(const RunConfig& cfg);
std::vector<double> sample_values(const SampleRow& row);

// --- checkpoints ---------------------------------------------------------------

inline constexpr std::uint32_t kCheckpointVersion = 1;

std::uint64_t fnv1a64(const void* data, std::size_t n, std::uint64_t h = 0xcbf29ce484222325ULL);
std::string digest_file(const std::filesystem::path& path);

// "MEMB", version, lmax, nlat, nlon (u32), t and (w, wdot) node-major as
// little-endian f64, then the FNV-1a 64 checksum of everything before it.
void write_checkpoint(const State& s, const std::filesystem::path& path);
State read_checkpoint(const std::filesystem::path& path);

// --- manifest ------------------------------------------------------------------

struct RunManifest {
  std::string command;
  std::map<std::string, std::string> config;
  std::string grid;  // "nlat x nlon, lmax"
  double wall_seconds = 0.0;
  std::string termination;
  std::string error;
  int exit_code = 0;
  std::map<std::string, double> summary;
  std::vector<std::filesystem::path> outputs;
};

// Writes manifest.json with a digest for each listed output.
void write_manifest(const RunManifest& m, const std::filesystem::path& path);

std::string artifact_version();

}  // namespace membrane
