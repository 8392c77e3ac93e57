// fpvuln: corpus generation, template extraction and direct-attack evaluation.

#include <algorithm>
#include <fstream>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fpvuln/commands.hpp"

namespace {

void add_common(CLI::App* cmd, fpvuln::RunConfig& c, bool generator) {
  cmd->add_option("--corpus-dir", c.corpus_dir, "Corpus directory");
  cmd->add_option("--out", c.out, "Output directory (default <corpus-dir>/reports)");
  cmd->add_option("--matcher", c.matcher, "minutiae, ridge or both")
      ->check(CLI::IsMember({"minutiae", "ridge", "both"}));
  cmd->add_option("--profiles", c.profiles, "Sensor profiles")->delimiter(',');
  cmd->add_option("--far-targets", c.far_targets, "FAR targets in percent")->delimiter(',');
  cmd->add_option("--seed", c.seed, "Master seed");
  cmd->add_option("--jobs", c.jobs, "Worker threads");
  cmd->add_option("--ci", c.ci, "Interval method: beta-binomial or bootstrap")
      ->check(CLI::IsMember({"beta-binomial", "bootstrap"}));
  if (generator) {
    cmd->add_option("--subjects", c.subjects, "Subjects");
    cmd->add_option("--fingers", c.fingers, "Fingers per subject");
    cmd->add_option("--samples", c.samples, "Samples per finger");
  }
}

std::string one_line(std::string s) {
  for (auto& ch : s)
    if (ch == '\n' || ch == '\r') ch = ' ';
  return s;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

// Folds a key=value file named by --config into the argument list. Keys given
// as flags on the command line are skipped, so the flags win. Corpus shape keys
// only reach gen-corpus, so one file can serve every subcommand.
std::vector<std::string> with_config(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc), kept;
  std::string file;
  std::set<std::string> given;
  for (std::size_t i = 0; i < args.size(); ++i) {
    const auto& a = args[i];
    if (a == "--config") {
      if (i + 1 == args.size()) throw fpvuln::ParameterError("--config needs a file name");
      file = args[++i];
      continue;
    }
    if (a.rfind("--config=", 0) == 0) {
      file = a.substr(9);
      continue;
    }
    if (a.rfind("--", 0) == 0) given.insert(a.substr(2, a.find('=') == std::string::npos ? a.npos : a.find('=') - 2));
    kept.push_back(a);
  }
  if (file.empty()) return kept;
  const auto sub = std::find_if(kept.begin() + 1, kept.end(), [](const std::string& a) { return a.rfind('-', 0) != 0; });
  const bool generator = sub != kept.end() && *sub == "gen-corpus";
  std::ifstream in(file);
  if (!in) throw fpvuln::IoError("cannot read config file " + file);
  std::string line;
  for (int n = 1; std::getline(in, line); ++n) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw fpvuln::FormatError(file + ":" + std::to_string(n) + ": expected key=value");
    auto key = trim(line.substr(0, eq));
    if (key.rfind("--", 0) == 0) key = key.substr(2);
    if (key.empty() || key == "config") throw fpvuln::FormatError(file + ":" + std::to_string(n) + ": bad key");
    if (given.count(key)) continue;
    if (!generator && (key == "subjects" || key == "fingers" || key == "samples")) continue;
    kept.push_back("--" + key);
    kept.push_back(trim(line.substr(eq + 1)));
  }
  return kept;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fingerprint verification and direct-attack evaluation"};
  app.require_subcommand(1);

  fpvuln::RunConfig cfg;
  auto* gen = app.add_subcommand("gen-corpus", "Generate a synthetic real/fake corpus");
  auto* ext = app.add_subcommand("extract", "Extract minutiae and ridge templates");
  auto* eval = app.add_subcommand("evaluate", "Score the protocol and write reports");
  auto* qh = app.add_subcommand("quality-hist", "Quality level histograms");
  auto* det = app.add_subcommand("det-export", "DET curves as CSV and SVG");
  add_common(gen, cfg, true);
  for (auto* cmd : {ext, eval, qh, det}) add_common(cmd, cfg, false);
  for (auto* cmd : {gen, ext, eval, qh, det})
    cmd->footer("--config FILE reads key=value lines (corpus-dir=..., far-targets=1,10); flags override them.");

  std::vector<std::string> args;
  try {
    args = with_config(argc, argv);
  } catch (const fpvuln::Error& e) {
    std::cerr << "error[" << e.category() << "]: " << one_line(e.what()) << "\n";
    return 1;
  }
  try {
    // CLI11 consumes the vector from the back.
    std::vector<std::string> rev(args.rbegin(), args.rend() - 1);
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "error[usage]: " << one_line(e.what()) << "\n";
    return 2;
  }

  try {
    if (*gen) fpvuln::cmd_gen_corpus(cfg, std::cout);
    else if (*ext) fpvuln::cmd_extract(cfg, std::cout);
    else if (*eval) fpvuln::cmd_evaluate(cfg, std::cout);
    else if (*qh) fpvuln::cmd_quality_hist(cfg, std::cout);
    else if (*det) fpvuln::cmd_det_export(cfg, std::cout);
  } catch (const fpvuln::Error& e) {
    std::cerr << "error[" << e.category() << "]: " << one_line(e.what()) << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error[internal]: " << one_line(e.what()) << "\n";
    return 1;
  }
  return 0;
}
