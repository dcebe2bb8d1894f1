// SPDX-FileCopyrightText: Copyright (c) 2026 vscreen contributors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "vscreen/binary_io.hpp"
#include "vscreen/errors.hpp"
#include "vscreen/pipeline.hpp"

namespace {

using vscreen::Task;

constexpr int kExitOk     = 0;
constexpr int kExitDomain = 1;
constexpr int kExitUsage  = 2;

std::string flagName(std::string name) {
  for (char& c : name) {
    if (c == '_') c = '-';
  }
  return "--" + name;
}

//! Extra output flags beyond --out, keyed by artifact name.
std::map<std::string, std::string> extraOutputs(Task t) {
  switch (t) {
    case Task::Kg: return {{"report.json", "--report"}};
    case Task::Train: return {{"loss.csv", "--loss"}};
    case Task::Generate: return {{"rejections.jsonl", "--reject-log"}, {"report.json", "--report"}};
    default: return {};
  }
}

struct TaskCommand {
  Task                               task;
  CLI::App*                          app = nullptr;
  std::map<std::string, std::string> inputs;
  std::map<std::string, std::string> params;
  std::map<std::string, std::string> fixed;
  std::vector<std::string>           sources;
  std::map<std::string, std::string> outputs;  //!< artifact -> path
  std::string                        outDir;
  uint64_t                           seed = 0;
};

void addTaskOptions(TaskCommand& cmd) {
  auto schema = nlohmann::json::parse(vscreen::taskSchemaJson(cmd.task));
  for (auto& [name, in] : schema["inputs"].items()) {
    if (in.contains("pattern")) {
      cmd.app->add_option("--sources", cmd.sources, "source SMILES files; the id is the file stem")->required();
      continue;
    }
    auto* opt = cmd.app->add_option(flagName(name), cmd.inputs[name], in["description"].get<std::string>());
    if (in["required"].get<bool>()) opt->required();
  }
  for (auto& [name, p] : schema["params"].items()) {
    if (cmd.fixed.count(name)) continue;
    std::string help = p["description"].get<std::string>();
    if (p.contains("choices")) {
      help += " {";
      for (std::size_t i = 0; i < p["choices"].size(); ++i) help += (i ? "," : "") + p["choices"][i].get<std::string>();
      help += "}";
    }
    if (p.contains("default")) help += " [" + p["default"].get<std::string>() + "]";
    auto* opt = cmd.app->add_option(name == "k" ? "-k,--k" : flagName(name), cmd.params[name], help);
    if (p["required"].get<bool>()) opt->required();
  }
  cmd.app->add_option("--seed", cmd.seed, "random seed [0]");
  const auto artifacts = vscreen::artifactNames(cmd.task);
  cmd.app->add_option("--out", cmd.outputs[artifacts.front()], "write " + artifacts.front() + " here (stdout when absent)");
  for (const auto& [artifact, flag] : extraOutputs(cmd.task)) {
    cmd.app->add_option(flag, cmd.outputs[artifact], "write " + artifact + " here");
  }
  cmd.app->add_option("--out-dir", cmd.outDir, "write every artifact into this directory");
}

vscreen::JobSpec buildSpec(const TaskCommand& cmd) {
  vscreen::JobSpec spec;
  spec.task = cmd.task;
  spec.seed = cmd.seed;
  for (const auto& [k, v] : cmd.inputs) {
    if (cmd.app->count(flagName(k)) > 0) spec.inputs[k] = v;
  }
  for (const auto& path : cmd.sources) {
    const std::string id = std::filesystem::path(path).stem().string();
    if (!spec.inputs.emplace("source." + id, path).second) {
      throw vscreen::Error(vscreen::ErrorCode::SchemaError, "inputs.source." + id + ": two sources share this id");
    }
  }
  for (const auto& [k, v] : cmd.params) {
    if (cmd.app->count(flagName(k)) > 0) spec.params[k] = v;
  }
  for (const auto& [k, v] : cmd.fixed) spec.params[k] = v;
  return spec;
}

void writeOutputs(const vscreen::JobOutput& out, const std::map<std::string, std::string>& paths, const std::string& outDir,
                  const std::string& primary) {
  if (!outDir.empty()) {
    std::filesystem::create_directories(outDir);
    for (const auto& [name, bytes] : out.artifacts) vscreen::writeFileBytes((std::filesystem::path(outDir) / name).string(), bytes);
  }
  bool primaryWritten = !outDir.empty();
  for (const auto& [name, path] : paths) {
    if (path.empty()) continue;
    vscreen::writeFileBytes(path, out.artifacts.at(name));
    if (name == primary) primaryWritten = true;
  }
  if (!primaryWritten) {
    const auto& bytes = out.artifacts.at(primary);
    std::cout.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    std::cout.flush();
  }
}

int reportError(const vscreen::Error& e, std::optional<Task> task) {
  std::cerr << "error: " << e.what() << "\n";
  if (e.code() == vscreen::ErrorCode::SchemaError) {
    if (task) std::cerr << "schema for " << vscreen::taskName(*task) << ":\n" << vscreen::taskSchemaJson(*task) << "\n";
    return kExitUsage;
  }
  return kExitDomain;
}

int serve(const std::string& workdir, const std::string& host, int port) {
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);

  vscreen::JobService service(workdir);
  service.start();
  vscreen::HttpFrontend http(service);
  const int bound = http.start(host, port);
  std::cerr << "vscreen " << vscreen::toolVersion() << " serving on " << host << ":" << bound << " workdir " << workdir << "\n";
  int sig = 0;
  sigwait(&set, &sig);
  http.stop();
  service.stop();
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vscreen: molecular screening and generation toolkit"};
  app.set_version_flag("--version", std::string(vscreen::toolVersion()));
  app.require_subcommand(1);

  std::vector<std::unique_ptr<TaskCommand>> commands;
  auto addTask = [&](CLI::App* parent, const std::string& name, Task task, std::map<std::string, std::string> fixed = {}) {
    auto cmd   = std::make_unique<TaskCommand>();
    cmd->task  = task;
    cmd->fixed = std::move(fixed);
    auto schema = nlohmann::json::parse(vscreen::taskSchemaJson(task));
    cmd->app    = parent->add_subcommand(name, schema["description"].get<std::string>());
    addTaskOptions(*cmd);
    commands.push_back(std::move(cmd));
  };

  addTask(&app, "parse", Task::Parse);
  addTask(&app, "sim", Task::Sim);
  auto* mevon = app.add_subcommand("mevon", "evolution graph")->require_subcommand(1);
  addTask(mevon, "build", Task::Mevon);
  auto* kg = app.add_subcommand("kg", "knowledge-graph embeddings")->require_subcommand(1);
  addTask(kg, "train", Task::Kg);
  auto* domains = app.add_subcommand("domains", "source domain selection")->require_subcommand(1);
  addTask(domains, "select", Task::Domains);
  addTask(&app, "train", Task::Train);
  addTask(&app, "predict", Task::Predict);
  addTask(&app, "screen", Task::Screen);
  addTask(&app, "generate", Task::Generate);
  addTask(&app, "optimize", Task::Optimize);
  auto* metrics = app.add_subcommand("metrics", "distribution metrics")->require_subcommand(1);
  addTask(metrics, "mmd", Task::Metrics, {{"metric", "mmd"}});

  std::string specPath, runOutDir;
  auto*       run = app.add_subcommand("run", "execute a JSON job spec");
  run->add_option("--spec", specPath, "job spec file")->required();
  run->add_option("--out-dir", runOutDir, "artifact directory")->required();

  std::string schemaTask;
  auto*       schemaCmd = app.add_subcommand("schema", "print the job schema");
  schemaCmd->add_option("task", schemaTask, "print only this task");

  const char* envWorkdir = std::getenv("WORKDIR");
  const char* envPort    = std::getenv("PORT");
  std::string workdir    = envWorkdir ? envWorkdir : "vscreen-work";
  int         port       = envPort ? std::atoi(envPort) : 8080;
  std::string host       = "127.0.0.1";
  auto*       serveCmd   = app.add_subcommand("serve", "run the job service (env WORKDIR, PORT)");
  serveCmd->add_option("--workdir", workdir, "job store directory");
  serveCmd->add_option("--port", port, "port, 0 picks a free one");
  serveCmd->add_option("--host", host, "bind address");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  if (*schemaCmd) {
    if (schemaTask.empty()) {
      std::cout << vscreen::jobSchemaJson() << "\n";
      return kExitOk;
    }
    const auto t = vscreen::taskFromName(schemaTask);
    if (!t) {
      std::cerr << "error: unknown task '" << schemaTask << "'\n";
      return kExitUsage;
    }
    std::cout << vscreen::taskSchemaJson(*t) << "\n";
    return kExitOk;
  }

  if (*serveCmd) {
    try {
      return serve(workdir, host, port);
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return kExitDomain;
    }
  }

  if (*run) {
    std::optional<Task> task;
    try {
      const auto spec = vscreen::JobSpec::fromJson(vscreen::readFileBytes(specPath));
      task            = spec.task;
      const auto out  = vscreen::runJob(spec);
      for (const auto& line : out.log) std::cerr << line << "\n";
      writeOutputs(out, {}, runOutDir, vscreen::artifactNames(spec.task).front());
      return kExitOk;
    } catch (const vscreen::Error& e) {
      return reportError(e, task);
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return kExitDomain;
    }
  }

  for (const auto& cmd : commands) {
    if (!cmd->app->parsed()) continue;
    try {
      const auto spec = buildSpec(*cmd);
      spec.validate();
      const auto out = vscreen::runJob(spec);
      for (const auto& line : out.log) std::cerr << line << "\n";
      writeOutputs(out, cmd->outputs, cmd->outDir, vscreen::artifactNames(cmd->task).front());
      return kExitOk;
    } catch (const vscreen::Error& e) {
      return reportError(e, cmd->task);
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return kExitDomain;
    }
  }
  std::cerr << app.help() << "\n";
  return kExitUsage;
}
