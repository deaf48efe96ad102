#pragma once

// Result emission: CSV files with a schema comment line, JSON-lines round
// logs, and a summary JSON that references every emitted file by relative
// path and content checksum. All numeric formatting is fixed so identical
// runs produce byte-identical CSV/JSONL; wall time lives only in the summary.

#include "warprf/active.hpp"
#include "warprf/core.hpp"
#include "warprf/metrics.hpp"
#include "warprf/uncertainty.hpp"
#include "warprf/version.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace warprf {

inline std::uint64_t fnv1a_bytes(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Shortest-round-trip-ish fixed formatting for CSV values.
inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf);
}

/// Collects files written under one output directory and emits the summary.
class ResultBundle {
 public:
  explicit ResultBundle(std::string out_dir) : out_dir_(std::move(out_dir)) {
    std::filesystem::create_directories(out_dir_);
  }

  const std::string& out_dir() const { return out_dir_; }

  std::string write_text(const std::string& rel_path, const std::string& content) {
    std::filesystem::path full = std::filesystem::path(out_dir_) / rel_path;
    if (full.has_parent_path()) std::filesystem::create_directories(full.parent_path());
    std::ofstream out(full, std::ios::binary);
    require(out.good(), "results: cannot open for writing: " + full.string());
    out << content;
    require(out.good(), "results: write failed: " + full.string());
    record(rel_path, content);
    return full.string();
  }

  /// Registers a file that was written directly (e.g. PFM/PPM dumps).
  void record_file(const std::string& rel_path) {
    std::filesystem::path full = std::filesystem::path(out_dir_) / rel_path;
    std::ifstream in(full, std::ios::binary);
    require(in.good(), "results: cannot checksum missing file: " + full.string());
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    record(rel_path, content);
  }

  std::string path_of(const std::string& rel_path) const {
    return (std::filesystem::path(out_dir_) / rel_path).string();
  }

  /// Writes summary.json; the only output allowed to carry timing.
  void write_summary(std::uint64_t config_hash, std::uint64_t seed, double wall_time_s) {
    nlohmann::json j;
    j["schema"] = 1;
    j["version"] = std::string(kVersion);
    char hash_hex[24];
    std::snprintf(hash_hex, sizeof(hash_hex), "%016llx",
                  static_cast<unsigned long long>(config_hash));
    j["config_hash"] = hash_hex;
    j["seed"] = seed;
    j["wall_time_s"] = wall_time_s;
    nlohmann::json outputs = nlohmann::json::array();
    for (const auto& f : files_) {
      char sum_hex[24];
      std::snprintf(sum_hex, sizeof(sum_hex), "%016llx",
                    static_cast<unsigned long long>(f.checksum));
      outputs.push_back({{"path", f.rel_path}, {"fnv1a64", sum_hex}});
    }
    j["outputs"] = outputs;
    std::ofstream out(std::filesystem::path(out_dir_) / "summary.json", std::ios::binary);
    require(out.good(), "results: cannot write summary.json");
    out << j.dump(2) << "\n";
  }

 private:
  struct EmittedFile {
    std::string rel_path;
    std::uint64_t checksum;
  };

  void record(const std::string& rel_path, const std::string& content) {
    files_.push_back(EmittedFile{rel_path, fnv1a_bytes(content)});
  }

  std::string out_dir_;
  std::vector<EmittedFile> files_;
};

// ---------------------------------------------------------------------------
// CSV / JSONL builders
// ---------------------------------------------------------------------------

inline std::string scores_csv(const std::vector<ViewScore>& scores) {
  std::string out = "# schema=1\nview_id,score,covered_fraction\n";
  for (const auto& s : scores) {
    out += s.view_id + "," + fmt_double(s.score) + "," + fmt_double(s.covered_fraction) + "\n";
  }
  return out;
}

inline std::string curve_csv(const SparsificationCurve& curve) {
  std::string out = "# schema=1\nfraction,normalized_mae\n";
  for (size_t i = 0; i < curve.fractions.size(); ++i) {
    out += fmt_double(curve.fractions[i]) + "," + fmt_double(curve.mae[i]) + "\n";
  }
  return out;
}

inline std::string rounds_csv(const std::vector<RoundRecord>& records) {
  std::vector<std::string> metric_cols;
  for (const auto& r : records) {
    for (const auto& [k, v] : r.metrics_after_fit) {
      if (std::find(metric_cols.begin(), metric_cols.end(), k) == metric_cols.end())
        metric_cols.push_back(k);
    }
  }
  std::sort(metric_cols.begin(), metric_cols.end());
  std::string out = "# schema=1\nround,selected_view,selected_score";
  for (const auto& c : metric_cols) out += "," + c;
  out += "\n";
  for (const auto& r : records) {
    out += std::to_string(r.round) + "," + r.selected_view + "," + fmt_double(r.selected_score);
    for (const auto& c : metric_cols) {
      auto it = r.metrics_after_fit.find(c);
      out += ",";
      if (it != r.metrics_after_fit.end()) out += fmt_double(it->second);
    }
    out += "\n";
  }
  return out;
}

inline std::string rounds_jsonl(const std::vector<RoundRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    nlohmann::json j;
    j["round"] = r.round;
    j["selected_view"] = r.selected_view;
    j["selected_score"] = r.selected_score;
    nlohmann::json scores = nlohmann::json::array();
    for (const auto& s : r.scores) {
      scores.push_back({{"view_id", s.view_id},
                        {"score", s.score},
                        {"covered_fraction", s.covered_fraction}});
    }
    j["scores"] = scores;
    nlohmann::json metrics;
    for (const auto& [k, v] : r.metrics_after_fit) {
      if (std::isnan(v)) metrics[k] = nullptr;
      else metrics[k] = v;
    }
    j["metrics_after_fit"] = metrics;
    out += j.dump() + "\n";
  }
  return out;
}

/// Selected camera trajectory for replay: row-major rotation and translation.
inline std::string poses_csv(const std::vector<View>& views) {
  std::string out =
      "# schema=1\nview_id,r00,r01,r02,r10,r11,r12,r20,r21,r22,tx,ty,tz\n";
  for (const auto& v : views) {
    out += v.id;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) out += "," + fmt_double(v.pose.rotation(r, c));
    for (int k = 0; k < 3; ++k) out += "," + fmt_double(v.pose.translation[k]);
    out += "\n";
  }
  return out;
}

}  // namespace warprf
