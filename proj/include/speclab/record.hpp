#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <string>
#include <vector>

#include "speclab/certify.hpp"
#include "speclab/config.hpp"

namespace speclab {

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr int kRecordFormatVersion = 1;

// One row of the flat table; floating-point cells carry 17 significant
// digits so rows are bit-reproducible.
struct FlatTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  static std::string cell(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
  }
  static std::string cell(std::int64_t v) { return std::to_string(v); }
  static std::string cell(int v) { return std::to_string(v); }
  static std::string cell(bool v) { return v ? "1" : "0"; }
  static std::string cell(const std::string& v) { return v; }

  template <class... T>
  void add_row(const T&... cells) {
    rows.push_back({cell(cells)...});
  }

  std::string to_csv() const {
    std::string out;
    for (std::size_t i = 0; i < header.size(); ++i)
      out += (i ? "," : "") + header[i];
    out += "\n";
    for (const auto& row : rows) {
      for (std::size_t i = 0; i < row.size(); ++i)
        out += (i ? "," : "") + row[i];
      out += "\n";
    }
    return out;
  }
};

struct ExperimentRecord {
  ExperimentKind kind = ExperimentKind::Spectrum;
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
  std::int64_t samples = 0;
  int jobs = 1;
  double wall_ms = 0.0;
  nlohmann::json results;
  std::vector<Certification> certifications;
  std::string canonical_config;

  bool all_passed() const {
    for (const auto& c : certifications)
      if (!c.pass) return false;
    return true;
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["format_version"] = kRecordFormatVersion;
    j["tool"] = "speclab";
    j["tool_version"] = kToolVersion;
    j["kind"] = kind_name(kind);
    char hash_hex[32];
    std::snprintf(hash_hex, sizeof(hash_hex), "%016llx",
                  static_cast<unsigned long long>(config_hash));
    j["config_hash"] = hash_hex;
    j["seed"] = seed;
    j["samples"] = samples;
    j["jobs"] = jobs;
    j["wall_ms"] = wall_ms;
    j["results"] = results;
    j["certifications"] = nlohmann::json::array();
    for (const auto& c : certifications)
      j["certifications"].push_back({{"name", c.name},
                                     {"pass", c.pass},
                                     {"statistic", c.statistic},
                                     {"detail", c.detail}});
    j["config"] = canonical_config;
    return j;
  }

  static ExperimentRecord from_json(const nlohmann::json& j) {
    ExperimentRecord r;
    if (auto k = kind_from_name(j.at("kind").get<std::string>()))
      r.kind = *k;
    r.config_hash =
        std::stoull(j.at("config_hash").get<std::string>(), nullptr, 16);
    r.seed = j.at("seed").get<std::uint64_t>();
    r.samples = j.at("samples").get<std::int64_t>();
    r.jobs = j.at("jobs").get<int>();
    r.wall_ms = j.at("wall_ms").get<double>();
    r.results = j.at("results");
    for (const auto& cj : j.at("certifications")) {
      Certification c;
      c.name = cj.at("name").get<std::string>();
      c.pass = cj.at("pass").get<bool>();
      c.statistic = cj.at("statistic").get<double>();
      c.detail = cj.at("detail").get<std::string>();
      r.certifications.push_back(c);
    }
    r.canonical_config = j.at("config").get<std::string>();
    return r;
  }
};

struct RecordPaths {
  std::filesystem::path record;
  std::filesystem::path table;
};

inline RecordPaths write_record(const ExperimentRecord& record,
                                const FlatTable& table,
                                const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  char hash_hex[32];
  std::snprintf(hash_hex, sizeof(hash_hex), "%08llx",
                static_cast<unsigned long long>(record.config_hash &
                                                0xffffffffull));
  std::string stem =
      std::string(kind_name(record.kind)) + "-" + hash_hex;
  RecordPaths paths;
  paths.record = std::filesystem::path(out_dir) / (stem + ".json");
  paths.table = std::filesystem::path(out_dir) / (stem + ".csv");
  {
    std::ofstream os(paths.record);
    os << record.to_json().dump(2) << "\n";
  }
  {
    std::ofstream os(paths.table);
    os << table.to_csv();
  }
  return paths;
}

}  // namespace speclab
