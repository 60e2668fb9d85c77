#include "membrane/io.hpp"

#include <algorithm>
#include <bit>
#include <cstdio>
#include <cstring>
#include <sstream>

#include <json.hpp>

namespace membrane {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(trim(cur));
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ValidationError("'" + key + "': expected a number, got '" + v + "'");
  }
}

template <class T>
void put_le(std::string& buf, T v) {
  static_assert(std::endian::native == std::endian::little, "little-endian host required");
  char bytes[sizeof(T)];
  std::memcpy(bytes, &v, sizeof(T));
  buf.append(bytes, sizeof(T));
}

template <class T>
T get_le(const std::string& buf, std::size_t& pos) {
  T v;
  std::memcpy(&v, buf.data() + pos, sizeof(T));
  pos += sizeof(T);
  return v;
}

}  // namespace

// --- configuration -------------------------------------------------------------

Config Config::parse(const std::string& text, const std::string& origin) {
  Config c;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find_first_of("#;");
    line = trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (line.empty()) continue;
    const std::string where = origin + ":" + std::to_string(lineno);
    if (line.front() == '[') {
      if (line.back() != ']') throw ValidationError(where + ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) throw ValidationError(where + ": empty section name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ValidationError(where + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ValidationError(where + ": empty key");
    const std::string full = section.empty() ? key : section + "." + key;
    if (c.values_.count(full)) throw ValidationError(where + ": duplicate key '" + full + "'");
    c.values_[full] = trim(line.substr(eq + 1));
  }
  return c;
}

Config Config::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string());
}

void Config::set(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ValidationError("override '" + assignment + "' is not key=value");
  set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

void Config::set(const std::string& key, const std::string& value) {
  if (key.empty()) throw ValidationError("override with empty key");
  values_[key] = value;
}

bool Config::has(const std::string& key) const { return values_.count(key) > 0; }

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
  read_.insert(key);
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

double Config::get_double(const std::string& key, double fallback) const {
  read_.insert(key);
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : to_double(key, it->second);
}

long Config::get_int(const std::string& key, long fallback) const {
  read_.insert(key);
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  try {
    std::size_t pos = 0;
    const long v = std::stol(it->second, &pos);
    if (pos != it->second.size()) throw std::invalid_argument(it->second);
    return v;
  } catch (const std::exception&) {
    throw ValidationError("'" + key + "': expected an integer, got '" + it->second + "'");
  }
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  read_.insert(key);
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  const std::string& v = it->second;
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ValidationError("'" + key + "': expected a boolean, got '" + v + "'");
}

std::vector<double> Config::get_doubles(const std::string& key, const std::vector<double>& fallback) const {
  read_.insert(key);
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  std::vector<double> out;
  for (const auto& part : split(it->second, ','))
    if (!part.empty()) out.push_back(to_double(key, part));
  return out;
}

std::vector<std::string> Config::unused() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : values_)
    if (!read_.count(k)) out.push_back(k);
  return out;
}

void Config::reject_unused() const {
  const auto keys = unused();
  if (keys.empty()) return;
  std::string msg = "unknown configuration key";
  msg += keys.size() > 1 ? "s: " : ": ";
  for (std::size_t i = 0; i < keys.size(); ++i) msg += (i ? ", " : "") + keys[i];
  throw ValidationError(msg);
}

std::vector<ModeSpec> parse_modes(const std::string& text) {
  std::vector<ModeSpec> out;
  for (const auto& entry : split(text, ';')) {
    if (entry.empty()) continue;
    const auto f = split(entry, ',');
    if (f.size() < 3 || f.size() > 5) throw ValidationError("mode '" + entry + "': expected l,m,amplitude[,channel][,velocity]");
    ModeSpec m;
    m.l = static_cast<int>(to_double("mode l", f[0]));
    m.m = static_cast<int>(to_double("mode m", f[1]));
    m.amplitude = to_double("mode amplitude", f[2]);
    for (std::size_t i = 3; i < f.size(); ++i) {
      if (f[i] == "normal")
        m.channel = Channel::normal;
      else if (f[i] == "tangent")
        m.channel = Channel::tangent;
      else if (f[i] == "velocity")
        m.velocity = true;
      else
        throw ValidationError("mode '" + entry + "': unknown flag '" + f[i] + "'");
    }
    if (m.l < 0 || std::abs(m.m) > m.l) throw ValidationError("mode '" + entry + "': need |m| <= l");
    out.push_back(m);
  }
  return out;
}

// --- CSV -----------------------------------------------------------------------

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
    : path_(path), out_(path, std::ios::binary | std::ios::trunc), columns_(header.size()) {
  if (!out_) throw IoError("cannot write " + path.string());
  row_text(header);
}

void CsvWriter::row(const std::vector<double>& values) {
  std::vector<std::string> cells;
  cells.reserve(values.size());
  for (double v : values) cells.push_back(format_double(v));
  row_text(cells);
}

void CsvWriter::row_text(const std::vector<std::string>& cells) {
  if (cells.size() != columns_) throw ValidationError("CSV row width does not match the header");
  for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
  out_ << '\n';
  out_.flush();
  if (!out_) throw IoError("write failed on " + path_.string());
}

std::vector<std::string> sample_header(const RunConfig& cfg) {
  std::vector<std::string> h{"t", "energy", "area", "volume", "fit_cx", "fit_cy", "fit_cz", "fit_radius", "fit_rms"};
  for (double n : cfg.norm_indices) h.push_back("norm_" + format_double(n));
  h.push_back("shape_norm");
  h.push_back("energy_norm");
  return h;
}

std::vector<double> sample_values(const SampleRow& r) {
  std::vector<double> v{r.t, r.energy, r.area, r.volume, r.fit.center.x(), r.fit.center.y(), r.fit.center.z(),
                        r.fit.radius, r.fit.rms};
  v.insert(v.end(), r.norms.begin(), r.norms.end());
  v.push_back(r.shape_norm);
  v.push_back(r.energy_norm);
  return v;
}

// --- checkpoints ---------------------------------------------------------------

std::uint64_t fnv1a64(const void* data, std::size_t n, std::uint64_t h) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string digest_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    h = fnv1a64(buf, static_cast<std::size_t>(in.gcount()), h);
  }
  char out[24];
  std::snprintf(out, sizeof out, "%016llx", static_cast<unsigned long long>(h));
  return std::string("fnv1a64:") + out;
}

void write_checkpoint(const State& s, const std::filesystem::path& path) {
  const SphGrid& g = *s.wdot.grid();
  std::string buf = "MEMB";
  put_le<std::uint32_t>(buf, kCheckpointVersion);
  put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(s.w.lmax));
  put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(g.nlat()));
  put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(g.nlon()));
  put_le<double>(buf, s.t);
  for (std::size_t k = 0; k < g.size(); ++k) {
    for (int c = 0; c < 3; ++c) put_le<double>(buf, s.w.w.comp[c][k]);
    for (int c = 0; c < 3; ++c) put_le<double>(buf, s.wdot.comp[c][k]);
  }
  put_le<std::uint64_t>(buf, fnv1a64(buf.data(), buf.size()));

  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw IoError("write failed on " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move checkpoint into place: " + ec.message());
}

State read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read checkpoint " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string buf = ss.str();

  constexpr std::size_t header = 4 + 4 * 4;
  if (buf.size() < header) throw CorruptCheckpoint(path.string() + ": truncated header");
  if (buf.compare(0, 4, "MEMB") != 0) throw CorruptCheckpoint(path.string() + ": bad magic");
  std::size_t pos = 4;
  const auto version = get_le<std::uint32_t>(buf, pos);
  if (version != kCheckpointVersion)
    throw VersionMismatch(path.string() + ": checkpoint format version " + std::to_string(version) +
                          ", this build reads version " + std::to_string(kCheckpointVersion));
  const auto lmax = get_le<std::uint32_t>(buf, pos);
  const auto nlat = get_le<std::uint32_t>(buf, pos);
  const auto nlon = get_le<std::uint32_t>(buf, pos);
  if (nlat == 0 || nlon == 0 || nlat > 100000 || nlon > 100000)
    throw CorruptCheckpoint(path.string() + ": implausible grid size");
  const std::size_t nodes = static_cast<std::size_t>(nlat) * nlon;
  const std::size_t expect = header + 8 + nodes * 6 * 8 + 8;
  if (buf.size() != expect)
    throw CorruptCheckpoint(path.string() + ": size " + std::to_string(buf.size()) + ", expected " +
                            std::to_string(expect));
  std::size_t tail = expect - 8;
  const auto stored = get_le<std::uint64_t>(buf, tail);
  if (stored != fnv1a64(buf.data(), expect - 8)) throw CorruptCheckpoint(path.string() + ": checksum mismatch");

  GridPtr grid;
  try {
    grid = SphGrid::make(static_cast<int>(nlat), static_cast<int>(nlon), static_cast<int>(lmax));
  } catch (const Error& e) {
    throw CorruptCheckpoint(path.string() + ": " + e.what());
  }
  State s;
  s.t = get_le<double>(buf, pos);
  s.w.lmax = static_cast<int>(lmax);
  s.w.w = VectorField(grid);
  s.wdot = VectorField(grid);
  for (std::size_t k = 0; k < nodes; ++k) {
    for (int c = 0; c < 3; ++c) s.w.w.comp[c][k] = get_le<double>(buf, pos);
    for (int c = 0; c < 3; ++c) s.wdot.comp[c][k] = get_le<double>(buf, pos);
  }
  return s;
}

// --- manifest ------------------------------------------------------------------

std::string artifact_version() { return "1.0.0"; }

void write_manifest(const RunManifest& m, const std::filesystem::path& path) {
  nlohmann::ordered_json j;
  j["artifact"] = "membrane";
  j["version"] = artifact_version();
  j["command"] = m.command;
  j["config"] = m.config;
  j["grid"] = m.grid;
  j["wall_seconds"] = m.wall_seconds;
  j["termination"] = m.termination;
  j["exit_code"] = m.exit_code;
  if (!m.error.empty()) j["error"] = m.error;
  if (!m.summary.empty()) j["summary"] = m.summary;
  nlohmann::ordered_json files = nlohmann::ordered_json::array();
  for (const auto& p : m.outputs) {
    if (!std::filesystem::exists(p)) continue;
    files.push_back({{"path", p.lexically_relative(path.parent_path()).generic_string()},
                     {"bytes", std::filesystem::file_size(p)},
                     {"digest", digest_file(p)}});
  }
  j["outputs"] = files;
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace membrane
