#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <map>
#include <string>

#include "cfa/pipeline.hpp"

namespace {

struct Flags {
  std::string config, out, scm, data, schema, impute;
  std::uint64_t seed = 0;
  std::size_t n = 0;
  int threads = 0;
};

int run(const std::string& sub, const Flags& f, const CLI::App& app) {
  using cfa::json;
  json j = json::object();
  cfa::fs::path base = ".";
  if (!f.config.empty()) {
    j = cfa::read_json_file(f.config);
    base = cfa::fs::path(f.config).parent_path();
    if (base.empty()) base = ".";
  }
  // command-line flags override the file; their paths are relative to the cwd
  auto abs = [](const std::string& p) { return cfa::fs::absolute(p).string(); };
  if (!f.scm.empty()) {
    j.erase("data");
    j["scm"] = (f.scm == "null-1" || f.scm == "desk-1") ? f.scm : abs(f.scm);
  }
  if (!f.data.empty()) {
    j.erase("scm");
    j["data"] = abs(f.data);
  }
  if (!f.schema.empty()) j["schema"] = abs(f.schema);
  if (app.count("--seed")) j["seed"] = f.seed;
  if (app.count("--n")) j["n"] = f.n;
  if (!f.impute.empty()) {
    if (f.impute != "simple") throw cfa::Error(cfa::ErrorCode::BadConfig, "--impute accepts only 'simple'");
    j["impute"] = f.impute;
  }
  int threads = f.threads;
  if (threads <= 0) threads = cfa::default_threads();
  j["threads"] = threads;
  if (!f.out.empty()) j["out"] = abs(f.out);
  auto cfg = cfa::parse_config(j, base);
  cfa::run_subcommand(sub, cfg, std::cout);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Causal fairness analysis: TV decomposition, CATE, ctf-DE, sensitivity, balance"};
  app.set_version_flag("--version", std::string(CFA_VERSION));
  app.require_subcommand(1);
  Flags f;
  std::string chosen;
  const std::map<std::string, std::string> about{
      {"simulate", "sample a dataset and its ground truth from an SCM"},
      {"balance", "standardized mean differences between X groups"},
      {"decompose", "TV into direct, indirect and spurious effects"},
      {"cate", "causal forest CATE, subgroup tables and heatmaps"},
      {"ctfde", "counterfactual direct effect by cell"},
      {"sensitivity", "robustness values and the overlap trimming curve"},
      {"report", "every analysis above in one run"}};
  for (const auto& name : cfa::subcommands()) {
    auto* s = app.add_subcommand(name, about.at(name));
    s->add_option("--config,-c", f.config, "JSON configuration file");
    s->add_option("--out,-o", f.out, "output directory");
    s->add_option("--seed", f.seed, "master seed (overrides the config)");
    s->add_option("--scm", f.scm, "reference SCM name or SCM JSON file");
    s->add_option("--n", f.n, "rows to simulate");
    s->add_option("--data", f.data, "CSV data file");
    s->add_option("--schema", f.schema, "schema JSON file");
    s->add_option("--impute", f.impute, "fill missing cells (only 'simple')");
    s->add_option("--threads", f.threads, "worker threads (default: CFA_THREADS or 1)");
    s->callback([&chosen, name] { chosen = name; });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  try {
    const CLI::App* sub = app.get_subcommand(chosen);
    return run(chosen, f, *sub);
  } catch (const cfa::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cfa::exit_code(e);
  } catch (const cfa::json::exception& e) {
    std::cerr << "error: invalid JSON: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
