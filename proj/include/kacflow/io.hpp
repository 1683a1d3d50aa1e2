#pragma once

// File contracts: round-trip CSV formatting, manifests, strict JSON input.
//
// Each artifact file `out` gets a sidecar `out.manifest.json` holding one JSON
// line with the producing command, the config hash, the seed and the library
// version. Nothing time- or host-dependent goes into artifacts, so reruns are
// byte-identical.

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "kacflow/error.hpp"
#include "kacflow/target.hpp"

namespace kacflow {

inline constexpr const char* kVersion = "0.1.0";

// Shortest form is not required; 17 significant digits always round-trip.
inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// 64-bit FNV-1a, printed as 16 hex digits.
inline std::string fnv1a_hex(const std::string& data) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : data) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// Hash of the canonical (key-sorted, compact) dump of a config.
inline std::string config_hash(const nlohmann::json& config) { return fnv1a_hex(config.dump()); }

class CsvWriter {
 public:
  explicit CsvWriter(const std::vector<std::string>& header) {
    for (std::size_t i = 0; i < header.size(); ++i) text_ << (i ? "," : "") << header[i];
    text_ << '\n';
  }

  CsvWriter& row(const std::vector<double>& values, long id = -1) {
    bool first = true;
    if (id >= 0) {
      text_ << id;
      first = false;
    }
    for (double v : values) {
      text_ << (first ? "" : ",") << format_double(v);
      first = false;
    }
    text_ << '\n';
    return *this;
  }

  std::string str() const { return text_.str(); }

 private:
  std::ostringstream text_;
};

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << text;
  if (!out) throw IoError("failed writing '" + path + "'");
}

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline nlohmann::json read_json(const std::string& path) {
  const std::string text = read_text(path);
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw UsageError("'" + path + "' is not valid JSON: " + e.what());
  }
}

inline std::string manifest_path(const std::string& artifact) { return artifact + ".manifest.json"; }

inline nlohmann::json make_manifest(const std::string& command, const nlohmann::json& config,
                                    std::uint64_t seed) {
  return {{"command", command},
          {"config", config},
          {"config_hash", config_hash(config)},
          {"seed", seed},
          {"version", kVersion}};
}

// Writes the artifact and its manifest (with the artifact's file name added).
inline void write_artifact(const std::string& path, const std::string& text, nlohmann::json manifest) {
  write_text(path, text);
  manifest["artifact"] = std::filesystem::path(path).filename().string();
  write_text(manifest_path(path), manifest.dump() + '\n');
}

// Reads a `sample_id,x1,...,xd` CSV as produced by `generate`.
inline std::vector<Point> read_samples_csv(const std::string& path) {
  std::istringstream in(read_text(path));
  std::string line;
  if (!std::getline(in, line)) throw UsageError("'" + path + "' is empty");
  std::size_t columns = 1;
  for (char ch : line) columns += ch == ',';
  if (line.rfind("sample_id,", 0) != 0 || columns < 2) {
    throw UsageError("'" + path + "': expected header sample_id,x1,...,xd");
  }
  std::vector<Point> samples;
  long row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string cell;
    Point x;
    std::size_t col = 0;
    while (std::getline(fields, cell, ',')) {
      if (col++ == 0) continue;
      double v = 0.0;
      const char* end = cell.data() + cell.size();
      const auto [ptr, ec] = std::from_chars(cell.data(), end, v);
      if (ec != std::errc() || ptr != end || cell.empty()) {
        throw UsageError("'" + path + "' row " + std::to_string(row) + ": bad number '" + cell + "'");
      }
      x.push_back(v);
    }
    if (col != columns) {
      throw UsageError("'" + path + "' row " + std::to_string(row) + ": expected " + std::to_string(columns) +
                       " columns");
    }
    samples.push_back(std::move(x));
  }
  return samples;
}

inline std::string samples_csv(const std::vector<Point>& samples) {
  std::vector<std::string> header{"sample_id"};
  const std::size_t d = samples.empty() ? 0 : samples.front().size();
  for (std::size_t i = 1; i <= d; ++i) header.push_back("x" + std::to_string(i));
  CsvWriter csv(header);
  for (std::size_t k = 0; k < samples.size(); ++k) csv.row(samples[k], static_cast<long>(k));
  return csv.str();
}

}  // namespace kacflow
