#pragma once

// Report and plot emission: JSON reports, the Markdown results table, score
// CSVs, DET CSV/SVG and quality histogram CSV/SVG. Numbers are printed with
// fixed formats so that reruns are byte-identical.

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "error.hpp"
#include "protocol.hpp"

namespace fpvuln {

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

inline std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

// Round-trip precision for scores and thresholds.
inline std::string exact(double v) { return fmt("%.17g", v); }

inline nlohmann::ordered_json ci_json(const ConfidenceInterval& ci) {
  return {{"sr", ci.point}, {"lo", ci.lo}, {"hi", ci.hi}};
}

inline nlohmann::ordered_json report_json(const EvaluationReport& r) {
  nlohmann::ordered_json j;
  j["matcher"] = r.matcher;
  j["profile"] = r.profile;
  j["counts"] = r.counts;
  j["eer"] = r.eer;
  auto& ops = j["operating_points"] = nlohmann::ordered_json::array();
  for (const auto& row : r.rows) {
    nlohmann::ordered_json o;
    o["target_far"] = row.op.target_far;
    o["threshold"] = row.op.threshold;
    o["achieved_far"] = row.op.achieved_far;
    o["frr"] = row.op.frr_at_threshold;
    for (const auto& [mode, ci] : row.attack1) o["attack1"][mode] = ci_json(ci);
    for (const auto& [mode, ci] : row.attack2) o["attack2"][mode] = ci_json(ci);
    ops.push_back(std::move(o));
  }
  return j;
}

inline std::string report_json_text(const EvaluationReport& r) { return report_json(r).dump(2) + "\n"; }

// One table per matcher: rows are profile x operating point, columns NOM
// FAR/FRR then SR with its interval for each attack and cooperation mode.
inline std::string markdown_table(const std::vector<EvaluationReport>& reports) {
  std::ostringstream out;
  std::string current;
  for (const auto& r : reports) {
    if (r.matcher != current) {
      if (!current.empty()) out << "\n";
      current = r.matcher;
      out << "### " << r.matcher << "\n\n";
      out << "| Profile | Target FAR (%) | FAR (%) | FRR (%) | Attack 1 coop | Attack 1 noncoop | Attack 2 coop | Attack 2 noncoop |\n";
      out << "|---|---|---|---|---|---|---|---|\n";
    }
    for (const auto& row : r.rows) {
      out << "| " << r.profile << " | " << fmt("%g", row.op.target_far) << " | " << fmt("%.2f", row.op.achieved_far) << " | "
          << fmt("%.2f", row.op.frr_at_threshold);
      for (const auto* block : {&row.attack1, &row.attack2})
        for (const char* mode : {"coop", "noncoop"}) {
          auto it = block->find(mode);
          out << " | " << (it == block->end() ? std::string("-") : format_ci(it->second));
        }
      out << " |\n";
    }
  }
  return out.str();
}

inline std::string scores_csv(const ScoreSet& s) {
  std::string out = "pair_id,score\n";
  for (const auto& sc : s.scores) out += sc.pair.id() + "," + exact(sc.value) + "\n";
  return out;
}

inline std::string det_csv(const std::vector<DetPoint>& det) {
  std::string out = "fmr_pct,fnmr_pct\n";
  for (const auto& p : det) out += fmt("%.6f", p.fmr) + "," + fmt("%.6f", p.fnmr) + "\n";
  return out;
}

struct DetSeries {
  std::string label;
  std::vector<DetPoint> points;
};

// DET plot on normal-deviate axes, 0.1% to 60% on both.
inline std::string det_svg(const std::vector<DetSeries>& series, const std::string& title) {
  constexpr double W = 480, H = 480, M = 60;
  constexpr double lo_pct = 0.1, hi_pct = 60.0;
  const double plo = probit(lo_pct / 100.0), phi = probit(hi_pct / 100.0);
  auto px = [&](double pct) {
    const double v = probit(std::clamp(pct, lo_pct, hi_pct) / 100.0);
    return M + (v - plo) / (phi - plo) * (W - 2 * M);
  };
  auto py = [&](double pct) {
    const double v = probit(std::clamp(pct, lo_pct, hi_pct) / 100.0);
    return H - M - (v - plo) / (phi - plo) * (H - 2 * M);
  };
  static const std::array<const char*, 4> colours = {"#1f4e9c", "#c0392b", "#27864a", "#7d3c98"};
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
    << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">" << title << "</text>\n";
  for (double t : {0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 40.0}) {
    const std::string x = fmt("%.1f", px(t)), y = fmt("%.1f", py(t));
    s << "<line x1=\"" << x << "\" y1=\"" << M << "\" x2=\"" << x << "\" y2=\"" << H - M
      << "\" stroke=\"#ddd\"/>\n";
    s << "<line x1=\"" << M << "\" y1=\"" << y << "\" x2=\"" << W - M << "\" y2=\"" << y
      << "\" stroke=\"#ddd\"/>\n";
    s << "<text x=\"" << x << "\" y=\"" << H - M + 16 << "\" text-anchor=\"middle\">" << fmt("%g", t) << "</text>\n";
    s << "<text x=\"" << M - 6 << "\" y=\"" << y << "\" text-anchor=\"end\" dy=\"4\">" << fmt("%g", t) << "</text>\n";
  }
  s << "<rect x=\"" << M << "\" y=\"" << M << "\" width=\"" << W - 2 * M << "\" height=\"" << H - 2 * M
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  s << "<text x=\"" << W / 2 << "\" y=\"" << H - 18 << "\" text-anchor=\"middle\">False match rate (%)</text>\n";
  s << "<text transform=\"translate(16," << H / 2
    << ") rotate(-90)\" text-anchor=\"middle\">False non-match rate (%)</text>\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    const char* colour = colours[i % colours.size()];
    s << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.5\" points=\"";
    for (const auto& p : series[i].points) s << fmt("%.2f", px(p.fmr)) << "," << fmt("%.2f", py(p.fnmr)) << " ";
    s << "\"/>\n";
    const double ly = M + 16 + 16.0 * static_cast<double>(i);
    s << "<line x1=\"" << W - M - 110 << "\" y1=\"" << ly << "\" x2=\"" << W - M - 90 << "\" y2=\"" << ly
      << "\" stroke=\"" << colour << "\" stroke-width=\"2\"/>\n";
    s << "<text x=\"" << W - M - 84 << "\" y=\"" << ly + 4 << "\">" << series[i].label << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

inline std::string quality_csv(const std::array<std::size_t, 5>& counts) {
  std::string out = "level,count\n";
  for (std::size_t i = 0; i < counts.size(); ++i) out += std::to_string(i + 1) + "," + std::to_string(counts[i]) + "\n";
  return out;
}

struct QualitySeries {
  std::string label;
  std::array<std::size_t, 5> counts{};
};

// Grouped bar chart of level fractions, one bar per series and level.
inline std::string quality_svg(const std::vector<QualitySeries>& series, const std::string& title) {
  constexpr double W = 420, H = 300, M = 50;
  static const std::array<const char*, 4> colours = {"#1f4e9c", "#c0392b", "#27864a", "#7d3c98"};
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
    << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << title << "</text>\n";
  s << "<line x1=\"" << M << "\" y1=\"" << H - M << "\" x2=\"" << W - M << "\" y2=\"" << H - M
    << "\" stroke=\"black\"/>\n";
  const double group_w = (W - 2 * M) / 5.0;
  const double bar_w = series.empty() ? 0.0 : 0.8 * group_w / static_cast<double>(series.size());
  for (int level = 0; level < 5; ++level) {
    const double gx = M + group_w * level;
    s << "<text x=\"" << fmt("%.1f", gx + group_w / 2) << "\" y=\"" << H - M + 16 << "\" text-anchor=\"middle\">"
      << level + 1 << "</text>\n";
    for (std::size_t i = 0; i < series.size(); ++i) {
      std::size_t total = 0;
      for (auto c : series[i].counts) total += c;
      const double frac = total == 0 ? 0.0 : static_cast<double>(series[i].counts[level]) / static_cast<double>(total);
      const double h = frac * (H - 2 * M);
      s << "<rect x=\"" << fmt("%.1f", gx + 0.1 * group_w + bar_w * static_cast<double>(i)) << "\" y=\""
        << fmt("%.1f", H - M - h) << "\" width=\"" << fmt("%.1f", bar_w) << "\" height=\"" << fmt("%.1f", h)
        << "\" fill=\"" << colours[i % colours.size()] << "\"/>\n";
    }
  }
  for (std::size_t i = 0; i < series.size(); ++i) {
    const double ly = M + 14.0 * static_cast<double>(i);
    s << "<rect x=\"" << W - M - 90 << "\" y=\"" << ly - 8 << "\" width=\"10\" height=\"10\" fill=\""
      << colours[i % colours.size()] << "\"/>\n";
    s << "<text x=\"" << W - M - 74 << "\" y=\"" << ly + 1 << "\">" << series[i].label << "</text>\n";
  }
  s << "<text x=\"" << W / 2 << "\" y=\"" << H - 14 << "\" text-anchor=\"middle\">Quality level</text>\n";
  s << "</svg>\n";
  return s.str();
}

} // namespace fpvuln
