#pragma once

// Small artifact writers shared by the CLI: CSV tables, deterministic SVG
// charts, and the per-directory run manifest.

#include <string>
#include <vector>

#include "json.hpp"

namespace aps {

// Rows are emitted with round-trip exact doubles (%.17g).
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

struct Series {
  std::string name;
  std::vector<double> x, y;
};

// Standalone SVG line chart; identical inputs produce identical bytes.
void write_line_svg(const std::string& path, const std::string& title,
                    const std::string& x_label, const std::string& y_label,
                    const std::vector<Series>& series);

// Histogram over precomputed bins (edges.size() == counts.size() + 1).
void write_histogram_svg(const std::string& path, const std::string& title,
                         const std::string& x_label,
                         const std::vector<double>& edges,
                         const std::vector<double>& counts);

// Git-style content hash of a file: SHA-1 over "blob <size>\0" + bytes,
// matching `git hash-object`.
std::string git_blob_sha1(const std::string& path);

struct RunManifest {
  std::string command;        // subcommand name
  nlohmann::json config;      // fully resolved configuration
  std::uint64_t seed = 0;
  std::vector<std::string> inputs;   // paths; hashed at write time
  std::vector<std::string> outputs;  // paths relative to the artifact dir
  double wall_seconds = 0.0;
};

// Writes <dir>/manifest.json (exactly one manifest per artifact directory).
void write_manifest(const std::string& dir, const RunManifest& manifest);

}  // namespace aps
