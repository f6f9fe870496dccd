// Command-line entry point: one subcommand per pipeline stage plus
// validate-config. Errors leave on stderr as a single JSON line and map to
// the documented exit codes (validation=1, io=2, backend=3, internal=4).

#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ch2ch/error.hpp"
#include "ch2ch/pipeline.hpp"

namespace {

const char* stage_help(const std::string& name) {
  if (name == "ingest") return "Read the raw corpus, clean it and filter by length ratio";
  if (name == "split") return "Assign whole books to test and chapters to train/valid";
  if (name == "stats") return "Write corpus statistics per split as CSV";
  if (name == "diagnose") return "Sentence-align a sample of chapters and report misalignments";
  if (name == "chunk") return "Cut train/valid chapters into aligned chunk pairs";
  if (name == "pack") return "Pack test-book source sentences into translation blocks";
  if (name == "export-train") return "Serialize chunk pairs as LM training sequences";
  if (name == "translate") return "Send blocks to the backend; resumable on failure";
  if (name == "postprocess") return "Trim degenerate repetition and merge blocks per chapter";
  if (name == "evaluate") return "Score merged chapters and write the evaluation report";
  if (name == "rep-report") return "Write repetition CSVs from the trimmed records";
  return "";
}

int fail_with(const ch2ch::Error& e) {
  const nlohmann::json err = {{"error", ch2ch::error_kind_name(e.kind())},
                              {"message", e.what()}};
  std::cerr << err.dump() << "\n";
  return e.exit_code();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ch2ch — chapter-to-chapter translation pipeline"};
  app.require_subcommand(1);
  app.set_version_flag("--version", ch2ch::kVersion);

  std::string config_path;
  bool hard_split = false;
  bool force = false;
  int jobs = 0;
  app.add_option("-c,--config", config_path, "Pipeline config JSON file")
      ->required();
  app.add_flag("--force", force, "Rerun the stage even when its outputs are fresh");

  std::vector<std::pair<CLI::App*, std::string>> stage_subs;
  for (const auto& name : ch2ch::stage_names()) {
    CLI::App* sub = app.add_subcommand(name, stage_help(name));
    sub->fallthrough();
    if (name == "chunk" || name == "pack") {
      sub->add_flag("--hard-split", hard_split,
                    "Split sentences that alone exceed the token budget");
    }
    if (name == "translate") {
      sub->add_option("--jobs", jobs, "Number of concurrent requests")
          ->check(CLI::PositiveNumber);
    }
    stage_subs.emplace_back(sub, name);
  }
  CLI::App* validate = app.add_subcommand(
      "validate-config", "Check the config file and list every violation");
  validate->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    const ch2ch::PipelineConfig config = ch2ch::config_from_file(config_path);
    if (validate->parsed()) {
      const auto violations = ch2ch::validate_config(config);
      if (violations.empty()) {
        std::cout << "config OK\n";
        return 0;
      }
      for (const auto& v : violations) {
        std::cout << v.field << ": " << v.message << "\n";
      }
      std::cout << violations.size() << " violation"
                << (violations.size() == 1 ? "" : "s") << "\n";
      return 1;
    }
    for (const auto& [sub, name] : stage_subs) {
      if (!sub->parsed()) continue;
      ch2ch::StageFlags flags;
      flags.hard_split = hard_split;
      flags.force = force;
      flags.jobs = jobs;
      const ch2ch::StageResult result = ch2ch::run_stage(name, config, flags);
      if (result.skipped) {
        std::cout << "[" << name << "] up to date\n";
      } else {
        std::cout << "[" << name << "] wrote";
        for (const auto& out : result.outputs) std::cout << " " << out;
        std::cout << "\n";
      }
      return 0;
    }
    std::cerr << "no subcommand selected\n";
    return 1;
  } catch (const ch2ch::Error& e) {
    return fail_with(e);
  } catch (const std::exception& e) {
    return fail_with(ch2ch::Error(ch2ch::ErrorKind::Internal, e.what()));
  }
}
