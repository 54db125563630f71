// SPDX-FileCopyrightText: Copyright (c) 2026 The FaaSTube-Sim Authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

// Command-line driver: run, sweep, compare, throughput and inspection.

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <regex>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "faastube/harness.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace faastube;

namespace {

int fail(const std::vector<std::string>& errors) {
  std::cerr << json{{"errors", errors}}.dump() << '\n';
  return 1;
}

// Expands a single '*'/'?' wildcard pattern in the file-name part of a path.
std::vector<fs::path> expand_glob(const std::string& pattern) {
  const fs::path p(pattern);
  if (pattern.find_first_of("*?") == std::string::npos) return {p};
  const fs::path dir = p.has_parent_path() ? p.parent_path() : fs::path(".");
  std::string rx;
  for (char c : p.filename().string()) {
    if (c == '*') rx += ".*";
    else if (c == '?') rx += '.';
    else if (std::string("\\^$.|+()[]{}").find(c) != std::string::npos) rx += std::string("\\") + c;
    else rx += c;
  }
  const std::regex re(rx);
  std::vector<fs::path> out;
  if (fs::is_directory(dir))
    for (const auto& e : fs::directory_iterator(dir))
      if (e.is_regular_file() && std::regex_match(e.path().filename().string(), re))
        out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Serverless GPU data-passing simulator"};
  app.require_subcommand(1);

  std::string config;
  std::string out_dir = "out";
  std::int64_t seed = -1;
  auto* run = app.add_subcommand("run", "Run one experiment config");
  run->add_option("--config", config, "Experiment config (JSON)")->required();
  run->add_option("--seed", seed, "Override the config seed");
  run->add_option("--out", out_dir, "Output directory");

  std::vector<std::string> patterns;
  auto* sweep = app.add_subcommand("sweep", "Run every config matching the patterns");
  sweep->add_option("--configs", patterns, "Config paths or globs")->required();
  sweep->add_option("--seed", seed, "Override the config seeds");
  sweep->add_option("--out", out_dir, "Output root; one directory per config");

  auto* cmp = app.add_subcommand("compare", "Side-by-side table of configs that differ in strategy");
  cmp->add_option("--configs", patterns, "Config paths or globs")->required();

  double slo_ms = 0.0;
  auto* thr = app.add_subcommand("throughput", "Highest offered rate meeting a P99 SLO");
  thr->add_option("--config", config, "Experiment config (JSON)")->required();
  thr->add_option("--slo-ms", slo_ms, "P99 latency target")->required();

  std::string name;
  auto* topo = app.add_subcommand("topology", "Topology tools");
  auto* topo_inspect = topo->add_subcommand("inspect", "Print a topology as JSON");
  topo_inspect->add_option("name", name, "Preset name or JSON path")->required();
  topo->require_subcommand(1);

  auto* wf = app.add_subcommand("workflow", "Workflow tools");
  auto* wf_inspect = wf->add_subcommand("inspect", "Print a workflow preset as JSON");
  wf_inspect->add_option("name", name, "Preset name")->required();
  wf->require_subcommand(1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail({e.what()});
  }

  try {
    auto load = [&](const fs::path& p) {
      auto c = load_config(p);
      if (seed >= 0) c.seed = static_cast<std::uint64_t>(seed);
      return c;
    };
    auto expand_all = [&] {
      std::vector<fs::path> files;
      for (const auto& pat : patterns) {
        const auto got = expand_glob(pat);
        if (got.empty()) throw ConfigErrors({"no config matches '" + pat + "'"});
        files.insert(files.end(), got.begin(), got.end());
      }
      return files;
    };

    if (*run) {
      const auto report = run_experiment(load(config));
      report.write(out_dir);
      std::cout << report.json().dump(2) << '\n';
    } else if (*sweep) {
      std::vector<std::string> errors;
      for (const auto& f : expand_all()) {
        try {
          run_experiment(load(f)).write(fs::path(out_dir) / f.stem());
          std::cout << f.string() << ": ok\n";
        } catch (const ConfigErrors& e) {
          for (const auto& m : e.errors()) errors.push_back(f.string() + ": " + m);
        } catch (const Error& e) {
          errors.push_back(f.string() + ": " + e.what());
        }
      }
      if (!errors.empty()) return fail(errors);
    } else if (*cmp) {
      std::vector<ExperimentConfig> cfgs;
      for (const auto& f : expand_all()) cfgs.push_back(load(f));
      std::cout << format_compare(compare(cfgs));
    } else if (*thr) {
      const auto r = max_throughput(load(config), slo_ms);
      std::cout << json{{"throughput_rps", fmt_num(r.rps)}, {"diagnostic", r.diagnostic}}.dump(2)
                << '\n';
      if (r.rps <= 0.0) return fail({r.diagnostic});
    } else if (*topo_inspect) {
      const auto t = load_topology(name);
      auto j = to_json(t);
      j["violations"] = validate(t);
      std::cout << j.dump(2) << '\n';
    } else if (*wf_inspect) {
      std::cout << to_json(preset_workflow(name)).dump(2) << '\n';
    }
  } catch (const ConfigErrors& e) {
    return fail(e.errors());
  } catch (const std::exception& e) {
    return fail({e.what()});
  }
  return 0;
}
