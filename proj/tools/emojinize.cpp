// Copyright 2026 The Emojinize Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


// Command-line entry point for the Emojinize pipeline.

#include <atomic>
#include <csignal>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "emojinize/error.hpp"
#include "emojinize/pipeline.hpp"

namespace {

namespace pl = emojinize::pipeline;
using nlohmann::ordered_json;

std::atomic<bool> g_stop{false};

extern "C" void on_signal(int) { g_stop.store(true); }

ordered_json result_json(const pl::StageResult& r) {
  ordered_json outputs = ordered_json::array();
  for (const auto& p : r.outputs) outputs.push_back(p.string());
  return ordered_json{{"stage", r.stage}, {"outputs", outputs}, {"summary", r.summary}};
}

void print_error(std::string_view code, std::string_view message) {
  std::cerr << ordered_json{{"error", {{"code", code}, {"message", message}}}}.dump() << "\n";
}

int run(std::vector<std::string> args, bool replay) {
  CLI::App app{"Emojinize: translate text into emoji and evaluate the translations with cloze tests"};
  app.require_subcommand(1);
  std::string config_path = "emojinize.json";
  bool force = false;
  app.add_option("-c,--config", config_path, "Pipeline configuration file")->capture_default_str();
  app.add_flag("--force", force, "Rebuild outputs whose settings changed");

  auto* corpus_cmd = app.add_subcommand("corpus-build", "Extract, filter and sample the text corpus");
  std::string mode_name = "single";
  auto* translate_cmd = app.add_subcommand("translate", "Translate the hidden words of every corpus entry");
  translate_cmd->add_option("-m,--mode", mode_name, "single, batch, mwe or multishot")
      ->check(CLI::IsMember({"single", "batch", "mwe", "multishot"}))
      ->capture_default_str();
  std::vector<std::string> condition_names;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Run the LLM cloze participant on each condition");
  evaluate_cmd->add_option("--conditions", condition_names, "Conditions to evaluate (default: from config)")
      ->delimiter(',');
  auto* report_cmd = app.add_subcommand("report", "Aggregate records into report.json and CSV series");
  auto* serve_cmd = app.add_subcommand("serve", "Run the human study service");
  auto* run_cmd = app.add_subcommand("run", "Run corpus-build, translate, evaluate and report in order");
  auto* replay_cmd = app.add_subcommand("replay", "Run another command answering only from the response cache");
  replay_cmd->prefix_command();

  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  if (replay_cmd->parsed()) {
    if (replay) {
      print_error("InvalidArgument", "replay cannot be nested");
      return 2;
    }
    std::vector<std::string> inner{args.front()};
    if (app.count("--config")) inner.insert(inner.end(), {"--config", config_path});
    if (force) inner.emplace_back("--force");
    for (auto& r : replay_cmd->remaining()) inner.push_back(r);
    if (inner.size() == 1 || (inner.size() == 3 && app.count("--config"))) {
      print_error("InvalidArgument", "replay needs a command to run");
      return 2;
    }
    return run(std::move(inner), true);
  }

  try {
    pl::PipelineOptions options;
    options.replay_only = replay;
    options.force = force;
    pl::Pipeline pipeline(pl::load_config(config_path), options);

    ordered_json out = ordered_json::array();
    if (corpus_cmd->parsed()) {
      out.push_back(result_json(pipeline.build_corpus()));
    } else if (translate_cmd->parsed()) {
      out.push_back(result_json(pipeline.translate(pl::parse_translate_mode(mode_name))));
    } else if (evaluate_cmd->parsed()) {
      std::vector<emojinize::eval::Condition> conditions;
      for (const auto& n : condition_names) conditions.push_back(emojinize::eval::parse_condition(n));
      out.push_back(result_json(pipeline.evaluate(conditions)));
    } else if (report_cmd->parsed()) {
      out.push_back(result_json(pipeline.report()));
    } else if (run_cmd->parsed()) {
      for (const auto& r : pipeline.run_all()) out.push_back(result_json(r));
    } else if (serve_cmd->parsed()) {
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      pipeline.serve([](int port) { std::cerr << "study service listening on port " << port << "\n"; },
                     [] { return g_stop.load(); });
      return 0;
    }
    std::cout << out.dump(2) << "\n";
    return 0;
  } catch (const emojinize::Error& e) {
    print_error(emojinize::to_string(e.code()), e.message());
    return 1;
  } catch (const std::exception& e) {
    print_error("InternalError", e.what());
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) { return run(std::vector<std::string>(argv, argv + argc), false); }
