#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "error.hpp"

namespace fpvuln {

enum class Realness { real, fake };
enum class Coop { cooperative, non_cooperative, none };

inline std::string to_string(Realness r) { return r == Realness::real ? "real" : "fake"; }
inline std::string to_string(Coop c) {
  switch (c) {
  case Coop::cooperative: return "coop";
  case Coop::non_cooperative: return "noncoop";
  default: return "na";
  }
}

inline Realness parse_realness(const std::string& s) {
  if (s == "real") return Realness::real;
  if (s == "fake") return Realness::fake;
  throw FormatError("unknown realness '" + s + "'");
}

inline Coop parse_coop(const std::string& s) {
  if (s == "coop") return Coop::cooperative;
  if (s == "noncoop") return Coop::non_cooperative;
  if (s == "na") return Coop::none;
  throw FormatError("unknown cooperation mode '" + s + "'");
}

struct SampleRecord {
  int subject = 0;
  int finger = 0;
  int sample = 0;
  std::string profile;
  Realness realness = Realness::real;
  Coop coop = Coop::none;
  std::string path; // relative to the corpus directory
  std::optional<int> quality_level;

  // Identity of the physical finger; pairs are formed within or across these.
  std::string finger_key() const { return std::to_string(subject) + "_" + std::to_string(finger); }

  // Unique record key, also the image file stem.
  std::string key() const {
    return finger_key() + "_" + std::to_string(sample) + "_" + profile + "_" + to_string(realness) +
           "_" + to_string(coop);
  }

  auto order_tuple() const {
    return std::make_tuple(profile, subject, finger, static_cast<int>(realness), static_cast<int>(coop),
                           sample);
  }
};

struct CorpusManifest {
  std::vector<SampleRecord> records;
  int subjects = 0;
  int fingers = 0;
  int samples = 0;
  std::vector<std::string> profiles;

  void sort() {
    std::sort(records.begin(), records.end(),
              [](const SampleRecord& a, const SampleRecord& b) { return a.order_tuple() < b.order_tuple(); });
  }

  // Throws FormatError on duplicate keys.
  void check_unique() const {
    std::set<std::string> seen;
    for (const auto& r : records)
      if (!seen.insert(r.key()).second) throw FormatError("duplicate manifest record " + r.key());
  }

  std::size_t count(Realness r, Coop c) const {
    return static_cast<std::size_t>(std::count_if(records.begin(), records.end(), [&](const SampleRecord& s) {
      return s.realness == r && s.coop == c;
    }));
  }
};

inline constexpr const char* kManifestHeader = "subject,finger,sample,profile,realness,coop,path,quality_level";

inline std::string encode_manifest(const CorpusManifest& m) {
  std::ostringstream out;
  out << kManifestHeader << '\n';
  for (const auto& r : m.records) {
    out << r.subject << ',' << r.finger << ',' << r.sample << ',' << r.profile << ',' << to_string(r.realness)
        << ',' << to_string(r.coop) << ',' << r.path << ',';
    if (r.quality_level) out << *r.quality_level;
    out << '\n';
  }
  return out.str();
}

inline CorpusManifest decode_manifest(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kManifestHeader) throw FormatError("unexpected manifest header");
  CorpusManifest m;
  std::set<int> subjects, fingers, samples;
  std::set<std::string> profiles;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cols.push_back(cell);
    if (!line.empty() && line.back() == ',') cols.emplace_back();
    if (cols.size() != 8) throw FormatError("manifest line " + std::to_string(lineno) + ": expected 8 columns");
    SampleRecord r;
    try {
      r.subject = std::stoi(cols[0]);
      r.finger = std::stoi(cols[1]);
      r.sample = std::stoi(cols[2]);
      if (!cols[7].empty()) r.quality_level = std::stoi(cols[7]);
    } catch (const std::exception&) {
      throw FormatError("manifest line " + std::to_string(lineno) + ": bad integer field");
    }
    r.profile = cols[3];
    r.realness = parse_realness(cols[4]);
    r.coop = parse_coop(cols[5]);
    r.path = cols[6];
    subjects.insert(r.subject);
    fingers.insert(r.finger);
    samples.insert(r.sample);
    profiles.insert(r.profile);
    m.records.push_back(std::move(r));
  }
  m.subjects = static_cast<int>(subjects.size());
  m.fingers = static_cast<int>(fingers.size());
  m.samples = static_cast<int>(samples.size());
  m.profiles.assign(profiles.begin(), profiles.end());
  m.check_unique();
  return m;
}

inline void write_manifest(const CorpusManifest& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << encode_manifest(m);
  if (!out) throw IoError("short write to " + path.string());
}

inline CorpusManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return decode_manifest(ss.str());
}

} // namespace fpvuln
