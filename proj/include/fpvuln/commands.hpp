#pragma once

// The batch commands behind the fpvuln CLI. Each takes a RunConfig and a
// stream for its one-line summaries; errors surface as fpvuln::Error.

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "image_io.hpp"
#include "manifest.hpp"
#include "protocol.hpp"
#include "quality.hpp"
#include "report.hpp"
#include "synthdb.hpp"

namespace fpvuln {

namespace fs = std::filesystem;

struct RunConfig {
  fs::path corpus_dir;
  fs::path out;
  std::string matcher = "both";
  std::vector<std::string> profiles; // empty: every profile (defaults for gen-corpus)
  std::vector<double> far_targets = default_far_targets();
  std::uint64_t seed = 1;
  int jobs = 1;
  std::string ci = "beta-binomial"; // or "bootstrap"
  int subjects = 17;
  int fingers = 4;
  int samples = 4;
};

inline void validate(const RunConfig& c) {
  if (c.matcher != "both") parse_matcher(c.matcher);
  if (c.far_targets.empty()) throw ParameterError("at least one FAR target is required");
  for (double t : c.far_targets)
    if (!(t > 0.0 && t <= 100.0)) throw ParameterError("FAR targets must lie in (0, 100], got " + fmt("%g", t));
  parse_ci_method(c.ci);
  if (c.jobs < 1) throw ParameterError("--jobs must be at least 1");
  for (const auto& p : c.profiles) profile_by_name(p);
}

inline std::vector<Matcher> selected_matchers(const RunConfig& c) {
  if (c.matcher == "both") return {Matcher::minutiae, Matcher::ridge};
  return {parse_matcher(c.matcher)};
}

inline void require_dir(const fs::path& p, const char* flag) {
  if (p.empty()) throw ParameterError(std::string(flag) + " is required");
}

inline fs::path manifest_path(const fs::path& corpus) { return corpus / "manifest.csv"; }

inline fs::path template_path(const fs::path& corpus, const SampleRecord& r, Matcher m) {
  return corpus / "templates" / (r.key() + (m == Matcher::minutiae ? ".min" : ".rfv"));
}

inline CorpusManifest load_corpus(const RunConfig& c) {
  require_dir(c.corpus_dir, "--corpus-dir");
  auto m = read_manifest(manifest_path(c.corpus_dir));
  m.check_unique();
  return m;
}

inline std::vector<std::string> selected_profiles(const RunConfig& c, const CorpusManifest& m) {
  if (c.profiles.empty()) return m.profiles;
  for (const auto& p : c.profiles)
    if (std::find(m.profiles.begin(), m.profiles.end(), p) == m.profiles.end())
      throw LookupError("profile " + p + " is not in the corpus");
  return c.profiles;
}

inline std::vector<const SampleRecord*> records_of(const CorpusManifest& m, const std::vector<std::string>& profiles) {
  std::vector<const SampleRecord*> out;
  for (const auto& r : m.records)
    if (std::find(profiles.begin(), profiles.end(), r.profile) != profiles.end()) out.push_back(&r);
  return out;
}

inline FingerprintImage load_record_image(const fs::path& corpus, const SampleRecord& r) {
  try {
    return read_image(corpus / r.path);
  } catch (const Error& e) {
    throw IoError("record " + r.key() + ": " + e.what());
  }
}

// Files are written under a staging directory and moved into place only once
// everything succeeded; on failure the staging directory is removed.
class StagedOutput {
public:
  explicit StagedOutput(fs::path out) : out_(std::move(out)), stage_(out_ / ".staging") {
    std::error_code ec;
    fs::remove_all(stage_, ec);
    fs::create_directories(stage_, ec);
    if (ec) throw IoError("cannot create " + stage_.string() + ": " + ec.message());
  }
  StagedOutput(const StagedOutput&) = delete;
  StagedOutput& operator=(const StagedOutput&) = delete;
  ~StagedOutput() {
    std::error_code ec;
    fs::remove_all(stage_, ec);
  }

  void write(const fs::path& rel, const std::string& text) {
    const auto p = stage_ / rel;
    std::error_code ec;
    fs::create_directories(p.parent_path(), ec);
    write_text(p, text);
    files_.push_back(rel);
  }

  void commit() {
    for (const auto& rel : files_) {
      const auto dst = out_ / rel;
      std::error_code ec;
      fs::create_directories(dst.parent_path(), ec);
      fs::rename(stage_ / rel, dst, ec);
      if (ec) throw IoError("cannot move output into " + dst.string() + ": " + ec.message());
    }
  }

  std::size_t size() const { return files_.size(); }

private:
  fs::path out_, stage_;
  std::vector<fs::path> files_;
};

inline fs::path output_dir(const RunConfig& c, const char* fallback) {
  if (!c.out.empty()) return c.out;
  require_dir(c.corpus_dir, "--corpus-dir");
  return c.corpus_dir / fallback;
}

// ---- gen-corpus -------------------------------------------------------------

inline fs::path cmd_gen_corpus(const RunConfig& c, std::ostream& log) {
  validate(c);
  require_dir(c.corpus_dir, "--corpus-dir");
  CorpusSpec spec;
  spec.subjects = c.subjects;
  spec.fingers_per_subject = c.fingers;
  spec.samples_per_finger = c.samples;
  spec.seed = c.seed;
  spec.jobs = c.jobs;
  if (!c.profiles.empty()) {
    spec.profiles.clear();
    for (const auto& p : c.profiles) spec.profiles.push_back(profile_by_name(p));
  }
  const auto m = build_corpus(spec, c.corpus_dir);
  log << "real=" << m.count(Realness::real, Coop::none) << " fake_coop=" << m.count(Realness::fake, Coop::cooperative)
      << " fake_noncoop=" << m.count(Realness::fake, Coop::non_cooperative) << "\n";
  return manifest_path(c.corpus_dir);
}

// ---- extract ----------------------------------------------------------------

inline std::size_t cmd_extract(const RunConfig& c, std::ostream& log) {
  validate(c);
  const auto m = load_corpus(c);
  const auto recs = records_of(m, selected_profiles(c, m));
  const auto matchers = selected_matchers(c);
  std::error_code ec;
  fs::create_directories(c.corpus_dir / "templates", ec);
  if (ec) throw IoError("cannot create " + (c.corpus_dir / "templates").string() + ": " + ec.message());
  const auto bank = build_gabor_bank();
  parallel_for(recs.size(), c.jobs, [&](std::size_t i) {
    const auto& r = *recs[i];
    const auto img = load_record_image(c.corpus_dir, r);
    for (auto mt : matchers) {
      if (mt == Matcher::minutiae) write_minutiae(minutiae_from_image(img), template_path(c.corpus_dir, r, mt));
      else write_rfv(ridge_features(img, bank), template_path(c.corpus_dir, r, mt));
    }
  });
  const auto n = recs.size() * matchers.size();
  log << "templates=" << n << "\n";
  return n;
}

inline TemplateStore load_templates(const fs::path& corpus, const std::vector<const SampleRecord*>& recs,
                                    const std::vector<Matcher>& matchers) {
  TemplateStore store;
  for (const auto* r : recs)
    for (auto mt : matchers) {
      const auto p = template_path(corpus, *r, mt);
      if (!fs::exists(p))
        throw LookupError("no " + to_string(mt) + " template for sample " + r->key() + " (run extract first)");
      if (mt == Matcher::minutiae) store.put(r->key(), read_minutiae(p));
      else store.put(r->key(), read_rfv(p));
    }
  return store;
}

// ---- quality ----------------------------------------------------------------

struct QualitySlices {
  CorpusManifest assessed; // manifest with quality levels filled in
  std::vector<std::string> profiles;
  std::map<std::string, std::array<std::size_t, 5>> real, fake;
};

inline QualitySlices assess_corpus(const RunConfig& c, const CorpusManifest& m) {
  QualitySlices q;
  q.assessed = m;
  q.profiles = selected_profiles(c, m);
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < m.records.size(); ++i)
    if (std::find(q.profiles.begin(), q.profiles.end(), m.records[i].profile) != q.profiles.end()) idx.push_back(i);
  std::vector<int> levels(idx.size());
  parallel_for(idx.size(), c.jobs, [&](std::size_t k) {
    levels[k] = assess_quality(load_record_image(c.corpus_dir, m.records[idx[k]])).level;
  });
  for (const auto& p : q.profiles) {
    q.real[p] = {};
    q.fake[p] = {};
  }
  for (std::size_t k = 0; k < idx.size(); ++k) {
    auto& r = q.assessed.records[idx[k]];
    r.quality_level = levels[k];
    auto& hist = r.realness == Realness::real ? q.real[r.profile] : q.fake[r.profile];
    ++hist[static_cast<std::size_t>(levels[k] - 1)];
  }
  return q;
}

inline void stage_quality(StagedOutput& out, const QualitySlices& q) {
  for (const auto& p : q.profiles) {
    out.write("quality/quality_" + p + "_real.csv", quality_csv(q.real.at(p)));
    out.write("quality/quality_" + p + "_fake.csv", quality_csv(q.fake.at(p)));
    out.write("quality/quality_" + p + ".svg",
              quality_svg({{"real", q.real.at(p)}, {"fake", q.fake.at(p)}}, "Quality levels: " + p));
  }
}

inline std::size_t cmd_quality_hist(const RunConfig& c, std::ostream& log) {
  validate(c);
  const auto m = load_corpus(c);
  const auto q = assess_corpus(c, m);
  StagedOutput out(output_dir(c, "reports"));
  stage_quality(out, q);
  out.write("quality/manifest.csv", encode_manifest(q.assessed));
  out.commit();
  for (const auto& p : q.profiles) {
    log << p << " real";
    for (auto n : q.real.at(p)) log << ' ' << n;
    log << " fake";
    for (auto n : q.fake.at(p)) log << ' ' << n;
    log << "\n";
  }
  return out.size();
}

// ---- evaluate and det-export ------------------------------------------------

inline const std::vector<std::string>& det_scenarios() {
  static const std::vector<std::string> s = {"nom", "coop", "noncoop"};
  return s;
}

inline void stage_det(StagedOutput& out, const std::vector<EvaluationReport>& reports) {
  std::map<std::pair<std::string, std::string>, std::vector<DetSeries>> panels;
  for (const auto& r : reports)
    for (const auto& sc : det_scenarios()) {
      const auto& det = r.det.at(sc);
      out.write("det/det_" + r.matcher + "_" + r.profile + "_" + sc + ".csv", det_csv(det));
      panels[{r.matcher, sc}].push_back({r.profile, det});
    }
  for (const auto& [key, series] : panels)
    out.write("det/det_" + key.first + "_" + key.second + ".svg",
              det_svg(series, "DET " + key.first + " (" + key.second + ")"));
}

inline std::vector<EvaluationResult> run_evaluations(const RunConfig& c, const CorpusManifest& m) {
  const auto profiles = selected_profiles(c, m);
  const auto matchers = selected_matchers(c);
  const auto store = load_templates(c.corpus_dir, records_of(m, profiles), matchers);
  std::vector<EvaluationResult> results;
  for (auto mt : matchers)
    for (const auto& p : profiles) results.push_back(evaluate(m, store, mt, p, c.far_targets, c.jobs, parse_ci_method(c.ci)));
  return results;
}

inline std::size_t cmd_evaluate(const RunConfig& c, std::ostream& log) {
  validate(c);
  const auto m = load_corpus(c);
  const auto results = run_evaluations(c, m);
  StagedOutput out(output_dir(c, "reports"));
  std::vector<EvaluationReport> reports;
  for (const auto& res : results) {
    const auto& r = res.report;
    const std::string stem = r.matcher + "_" + r.profile;
    out.write("report_" + stem + ".json", report_json_text(r));
    out.write("scores/" + stem + "_genuine.csv", scores_csv(res.scores.genuine));
    out.write("scores/" + stem + "_impostor.csv", scores_csv(res.scores.impostor));
    for (const auto& [mode, set] : res.scores.attack1) out.write("scores/" + stem + "_attack1_" + mode + ".csv", scores_csv(set));
    for (const auto& [mode, set] : res.scores.attack2) out.write("scores/" + stem + "_attack2_" + mode + ".csv", scores_csv(set));
    reports.push_back(r);
    log << r.matcher << " " << r.profile << " eer=" << fmt("%.2f", r.eer) << "\n";
  }
  out.write("results.md", markdown_table(reports));
  stage_det(out, reports);
  stage_quality(out, assess_corpus(c, m));
  out.commit();
  return out.size();
}

inline std::size_t cmd_det_export(const RunConfig& c, std::ostream& log) {
  validate(c);
  const auto m = load_corpus(c);
  std::vector<EvaluationReport> reports;
  for (auto& res : run_evaluations(c, m)) reports.push_back(std::move(res.report));
  StagedOutput out(output_dir(c, "reports"));
  stage_det(out, reports);
  out.commit();
  log << "det_files=" << out.size() << "\n";
  return out.size();
}

} // namespace fpvuln
