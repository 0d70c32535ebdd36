#include "aps/report_io.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "aps/error.hpp"
#include "aps/version.hpp"

namespace aps {

using nlohmann::json;

namespace {

std::string fmt_full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Short fixed formatting for SVG coordinates; snprintf is locale-independent
// enough here (LC_NUMERIC is never touched) and keeps output deterministic.
std::string fmt_svg(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

std::string fmt_tick(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

}  // namespace

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
  APS_CHECK(!header.empty(), "write_csv: empty header");
  std::ofstream out(path);
  APS_REQUIRE(out.good(), "write_csv: cannot open " + path);
  for (std::size_t i = 0; i < header.size(); ++i) {
    out << (i == 0 ? "" : ",") << header[i];
  }
  out << "\n";
  for (const auto& row : rows) {
    APS_CHECK(row.size() == header.size(), "write_csv: row width does not match header");
    for (std::size_t i = 0; i < row.size(); ++i) {
      out << (i == 0 ? "" : ",") << fmt_full(row[i]);
    }
    out << "\n";
  }
  APS_REQUIRE(out.good(), "write_csv: write failed for " + path);
}

namespace {

constexpr int kW = 640, kH = 420;
constexpr int kMarginL = 70, kMarginR = 20, kMarginT = 40, kMarginB = 50;

struct Range {
  double lo, hi;
};

Range pad(Range r) {
  if (r.lo == r.hi) {
    r.lo -= 1.0;
    r.hi += 1.0;
  }
  const double w = r.hi - r.lo;
  return {r.lo - 0.05 * w, r.hi + 0.05 * w};
}

double sx(double x, Range r) {
  return kMarginL + (x - r.lo) / (r.hi - r.lo) * (kW - kMarginL - kMarginR);
}

double sy(double y, Range r) {
  return kH - kMarginB - (y - r.lo) / (r.hi - r.lo) * (kH - kMarginT - kMarginB);
}

void svg_header(std::ostream& out, const std::string& title) {
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
      << "\" viewBox=\"0 0 " << kW << " " << kH << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << kW / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\" "
      << "font-family=\"sans-serif\">" << title << "</text>\n";
}

void svg_axes(std::ostream& out, Range xr, Range yr, const std::string& x_label,
              const std::string& y_label) {
  out << "<line x1=\"" << kMarginL << "\" y1=\"" << kH - kMarginB << "\" x2=\"" << kW - kMarginR
      << "\" y2=\"" << kH - kMarginB << "\" stroke=\"black\"/>\n"
      << "<line x1=\"" << kMarginL << "\" y1=\"" << kMarginT << "\" x2=\"" << kMarginL
      << "\" y2=\"" << kH - kMarginB << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double fx = xr.lo + (xr.hi - xr.lo) * i / 4.0;
    const double fy = yr.lo + (yr.hi - yr.lo) * i / 4.0;
    out << "<text x=\"" << fmt_svg(sx(fx, xr)) << "\" y=\"" << kH - kMarginB + 18
        << "\" text-anchor=\"middle\" font-size=\"11\" font-family=\"sans-serif\">"
        << fmt_tick(fx) << "</text>\n";
    out << "<text x=\"" << kMarginL - 8 << "\" y=\"" << fmt_svg(sy(fy, yr) + 4)
        << "\" text-anchor=\"end\" font-size=\"11\" font-family=\"sans-serif\">" << fmt_tick(fy)
        << "</text>\n";
  }
  out << "<text x=\"" << (kMarginL + kW - kMarginR) / 2 << "\" y=\"" << kH - 12
      << "\" text-anchor=\"middle\" font-size=\"13\" font-family=\"sans-serif\">" << x_label
      << "</text>\n";
  out << "<text x=\"16\" y=\"" << (kMarginT + kH - kMarginB) / 2
      << "\" text-anchor=\"middle\" font-size=\"13\" font-family=\"sans-serif\" "
      << "transform=\"rotate(-90 16 " << (kMarginT + kH - kMarginB) / 2 << ")\">" << y_label
      << "</text>\n";
}

const char* kSeriesColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                               "#ff7f0e", "#8c564b"};

}  // namespace

void write_line_svg(const std::string& path, const std::string& title,
                    const std::string& x_label, const std::string& y_label,
                    const std::vector<Series>& series) {
  APS_CHECK(!series.empty(), "write_line_svg: no series");
  Range xr{0, 0}, yr{0, 0};
  bool first = true;
  for (const auto& s : series) {
    APS_CHECK(!s.x.empty() && s.x.size() == s.y.size(),
              "write_line_svg: series '" + s.name + "' is empty or ragged");
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      APS_CHECK(std::isfinite(s.x[i]) && std::isfinite(s.y[i]),
                "write_line_svg: non-finite point in series '" + s.name + "'");
      if (first) {
        xr = {s.x[i], s.x[i]};
        yr = {s.y[i], s.y[i]};
        first = false;
      } else {
        xr.lo = std::min(xr.lo, s.x[i]);
        xr.hi = std::max(xr.hi, s.x[i]);
        yr.lo = std::min(yr.lo, s.y[i]);
        yr.hi = std::max(yr.hi, s.y[i]);
      }
    }
  }
  xr = pad(xr);
  yr = pad(yr);
  std::ostringstream out;
  svg_header(out, title);
  svg_axes(out, xr, yr, x_label, y_label);
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* color = kSeriesColors[k % 6];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      out << (i == 0 ? "" : " ") << fmt_svg(sx(s.x[i], xr)) << "," << fmt_svg(sy(s.y[i], yr));
    }
    out << "\"/>\n";
    out << "<text x=\"" << kW - kMarginR - 6 << "\" y=\"" << kMarginT + 16 + 16 * k
        << "\" text-anchor=\"end\" font-size=\"12\" font-family=\"sans-serif\" fill=\"" << color
        << "\">" << s.name << "</text>\n";
  }
  out << "</svg>\n";
  std::ofstream f(path);
  APS_REQUIRE(f.good(), "write_line_svg: cannot open " + path);
  f << out.str();
  APS_REQUIRE(f.good(), "write_line_svg: write failed for " + path);
}

void write_histogram_svg(const std::string& path, const std::string& title,
                         const std::string& x_label, const std::vector<double>& edges,
                         const std::vector<double>& counts) {
  APS_CHECK(!counts.empty(), "write_histogram_svg: no bins");
  APS_CHECK(edges.size() == counts.size() + 1, "write_histogram_svg: edges must bracket bins");
  Range xr{edges.front(), edges.back()};
  double peak = 0.0;
  for (const double c : counts) {
    APS_CHECK(std::isfinite(c) && c >= 0.0, "write_histogram_svg: bad count");
    peak = std::max(peak, c);
  }
  Range yr{0.0, peak > 0.0 ? peak : 1.0};
  xr = pad(xr);
  yr.hi *= 1.05;
  std::ostringstream out;
  svg_header(out, title);
  svg_axes(out, xr, yr, x_label, "count");
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const double x0 = sx(edges[i], xr);
    const double x1 = sx(edges[i + 1], xr);
    const double y1 = sy(counts[i], yr);
    const double y0 = sy(0.0, yr);
    out << "<rect x=\"" << fmt_svg(x0) << "\" y=\"" << fmt_svg(y1) << "\" width=\""
        << fmt_svg(std::max(0.5, x1 - x0 - 1.0)) << "\" height=\"" << fmt_svg(y0 - y1)
        << "\" fill=\"#1f77b4\" stroke=\"none\"/>\n";
  }
  out << "</svg>\n";
  std::ofstream f(path);
  APS_REQUIRE(f.good(), "write_histogram_svg: cannot open " + path);
  f << out.str();
  APS_REQUIRE(f.good(), "write_histogram_svg: write failed for " + path);
}

std::string git_blob_sha1(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  APS_REQUIRE(in.good(), "git_blob_sha1: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string body = buf.str();
  const std::string preimage = "blob " + std::to_string(body.size()) + '\0' + body;

  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  APS_REQUIRE(ctx != nullptr, "git_blob_sha1: EVP context allocation failed");
  const bool ok = EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) == 1 &&
                  EVP_DigestUpdate(ctx, preimage.data(), preimage.size()) == 1 &&
                  EVP_DigestFinal_ex(ctx, digest, &len) == 1;
  EVP_MD_CTX_free(ctx);
  APS_REQUIRE(ok, "git_blob_sha1: digest failed");

  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xF]);
  }
  return out;
}

void write_manifest(const std::string& dir, const RunManifest& manifest) {
  json j;
  j["format"] = "run-manifest";
  j["version"] = kManifestFormatVersion;
  j["tool_version"] = kVersion;
  j["command"] = manifest.command;
  j["config"] = manifest.config;
  j["seed"] = manifest.seed;
  json inputs = json::array();
  for (const auto& path : manifest.inputs) {
    inputs.push_back(json{{"path", path}, {"git_blob_sha1", git_blob_sha1(path)}});
  }
  j["inputs"] = inputs;
  j["outputs"] = manifest.outputs;
  j["wall_seconds"] = manifest.wall_seconds;
  std::filesystem::create_directories(dir);
  const std::string path = dir + "/manifest.json";
  std::ofstream out(path);
  APS_REQUIRE(out.good(), "write_manifest: cannot open " + path);
  out << j.dump(2) << "\n";
  APS_REQUIRE(out.good(), "write_manifest: write failed for " + path);
}

}  // namespace aps
