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

#include "vscreen/pipeline.hpp"

#include <openssl/evp.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "pipeline_internal.hpp"
#include "vscreen/binary_io.hpp"
#include "vscreen/chem.hpp"
#include "vscreen/diffusion.hpp"
#include "vscreen/domain.hpp"
#include "vscreen/errors.hpp"
#include "vscreen/kg.hpp"
#include "vscreen/mevon.hpp"
#include "vscreen/mpnn.hpp"
#include "vscreen/similarity.hpp"
#include "csv.hpp"

#ifndef VSCREEN_VERSION
#define VSCREEN_VERSION "0.0.0"
#endif

namespace vscreen {

using nlohmann::json;

std::string_view toolVersion() { return VSCREEN_VERSION; }

namespace {

constexpr std::array<std::pair<Task, std::string_view>, 11> kTaskNames{{
    {Task::Parse, "parse"},
    {Task::Sim, "sim"},
    {Task::Mevon, "mevon"},
    {Task::Kg, "kg"},
    {Task::Domains, "domains"},
    {Task::Train, "train"},
    {Task::Predict, "predict"},
    {Task::Screen, "screen"},
    {Task::Generate, "generate"},
    {Task::Optimize, "optimize"},
    {Task::Metrics, "metrics"},
}};

}  // namespace

std::string_view taskName(Task t) {
  for (const auto& [task, name] : kTaskNames) {
    if (task == t) return name;
  }
  return "unknown";
}

std::optional<Task> taskFromName(std::string_view name) {
  for (const auto& [task, n] : kTaskNames) {
    if (n == name) return task;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Schema

namespace detail {

namespace {

ParamDef param(std::string name, ParamKind kind, std::optional<std::string> def, std::string help) {
  ParamDef p;
  p.name = std::move(name);
  p.kind = kind;
  p.def  = std::move(def);
  p.help = std::move(help);
  return p;
}

ParamDef intParam(std::string name, std::optional<std::string> def, double min, std::string help) {
  ParamDef p = param(std::move(name), ParamKind::Int, std::move(def), std::move(help));
  p.min      = min;
  return p;
}

ParamDef realParam(std::string name, std::optional<std::string> def, std::string help,
                   std::optional<double> min = std::nullopt, bool exclusive = false) {
  ParamDef p     = param(std::move(name), ParamKind::Real, std::move(def), std::move(help));
  p.min          = min;
  p.minExclusive = exclusive;
  return p;
}

ParamDef choiceParam(std::string name, std::optional<std::string> def, std::vector<std::string> choices, std::string help) {
  ParamDef p = param(std::move(name), ParamKind::Choice, std::move(def), std::move(help));
  p.choices  = std::move(choices);
  return p;
}

ParamDef required(ParamDef p) {
  p.required = true;
  return p;
}

std::vector<ParamDef> scheduleParams() {
  return {
      intParam("steps", "200", 1, "diffusion steps T"),
      realParam("beta1", "0.0001", "first beta of the linear schedule", 0.0, true),
      realParam("betaT", "0.02", "last beta of the linear schedule", 0.0, true),
  };
}

std::vector<TaskDef> buildDefs() {
  std::vector<TaskDef> defs;

  defs.push_back({Task::Parse,
                  "parse a SMILES file into one JSON record per line",
                  {{"in", true, false, "SMILES file"}},
                  {},
                  {{"molecules.jsonl", "one record per input line"}}});

  defs.push_back({Task::Sim,
                  "pairwise similarity matrix between two SMILES files",
                  {{"a", true, false, "row molecules"}, {"b", false, false, "column molecules (defaults to a)"}},
                  {choiceParam("metric", "tanimoto", {"tanimoto", "edit", "wl"}, "similarity measure"),
                   intParam("radius", "2", 0, "fingerprint radius"),
                   intParam("width", "2048", 1, "fingerprint width in bits"),
                   intParam("wl_iterations", "3", 0, "WL refinement rounds")},
                  {{"similarity.csv", "matrix with row and column names"}}});

  defs.push_back({Task::Mevon,
                  "build the evolution graph over a molecule set",
                  {{"in", true, false, "SMILES file"}, {"labels", false, false, "CSV name,label"}},
                  {realParam("theta1", "0.5", "stage-one threshold"), realParam("theta2", "0.5", "stage-two threshold"),
                   choiceParam("stage1", "fingerprint", {"fingerprint", "edit"}, "stage-one similarity"),
                   intParam("wl_iterations", "3", 0, "WL refinement rounds"), intParam("radius", "2", 0, "fingerprint radius"),
                   intParam("width", "2048", 1, "fingerprint width in bits")},
                  {{"graph.json", "nodes, layers, edges with both scores"}}});

  defs.push_back({Task::Kg,
                  "train numeric knowledge-graph embeddings",
                  {},
                  {required(realParam("min", std::nullopt, "smallest value")),
                   required(realParam("max", std::nullopt, "largest value")),
                   required(realParam("step", std::nullopt, "grid spacing", 0.0, true)),
                   intParam("dim", "8", 1, "embedding width"), realParam("gamma", "1.0", "margin", 0.0),
                   choiceParam("metric", "l2", {"l1", "l2"}, "distance"), intParam("epochs", "2000", 0, "epochs"),
                   realParam("lr", "0.01", "learning rate", 0.0, true),
                   realParam("max_norm", "0", "entity norm bound (0 derives it)", 0.0)},
                  {{"table.bin", "embedding table"}, {"report.json", "loss trace and directional accuracy"}}});

  defs.push_back({Task::Domains,
                  "rank source domains by Wasserstein distance to a target",
                  {{"target", true, false, "target SMILES"}, {"source.", true, true, "one SMILES file per source id"}},
                  {intParam("k", "0", 0, "number of sources to keep (0 keeps all)"), intParam("radius", "2", 0, "fingerprint radius"),
                   intParam("width", "2048", 1, "fingerprint width in bits")},
                  {{"ranking.csv", "rank,id,distance"}}});

  std::vector<ParamDef> trainParams{
      required(choiceParam("head", std::nullopt, {"mpp", "dta", "ddi", "score", "controller"}, "model to train")),
      intParam("epochs", "30", 0, "epochs"),
      realParam("lr", "0.001", "learning rate", 0.0, true),
      intParam("batch", "32", 1, "minibatch size"),
      choiceParam("cosine", "true", {"true", "false"}, "cosine learning-rate decay"),
      intParam("hidden", std::nullopt, 1, "hidden width (64 for heads, 32 for diffusion)"),
      intParam("layers", "2", 0, "message-passing layers"),
      intParam("graph_dim", "64", 1, "graph embedding width"),
      intParam("head_hidden", "64", 1, "head hidden width"),
      choiceParam("dta_objective", "regression", {"regression", "classification"}, "dta loss"),
      intParam("protein_k", "2", 1, "protein k-mer size"),
      intParam("protein_windows", "4", 1, "protein local windows"),
      intParam("protein_dim", "32", 1, "protein encoder width"),
      intParam("align_dim", "0", 0, "value alignment width (0 uses the kg table width when given)"),
      realParam("contrastive_weight", "0.5", "alignment loss weight", 0.0),
      realParam("temperature", "0.1", "alignment temperature", 0.0, true),
      choiceParam("property", "heteroatoms", {"heteroatoms", "rings", "aromatic_atoms", "heavy_atoms", "bonds"},
                  "controller target when no labels are given"),
  };
  for (auto& p : scheduleParams()) trainParams.push_back(p);
  defs.push_back({Task::Train,
                  "train a prediction head, a score model or a guidance controller",
                  {{"data", true, false, "dataset CSV (heads) or SMILES (score, controller)"},
                   {"kg_table", false, false, "embedding table for value alignment"},
                   {"labels", false, false, "controller targets, CSV name,label"}},
                  std::move(trainParams),
                  {{"model.bin", "checkpoint"}, {"loss.csv", "epoch,loss"}}});

  defs.push_back({Task::Predict,
                  "predict labels for a dataset",
                  {{"model", true, false, "head checkpoint"}, {"data", true, false, "dataset CSV"}},
                  {},
                  {{"predictions.jsonl", "index, prediction, label"}}});

  defs.push_back({Task::Screen,
                  "rank a library against a protein target",
                  {{"target", true, false, "FASTA"}, {"library", true, false, "SMILES"}, {"model", true, false, "dta checkpoint"}},
                  {intParam("top", "10", 1, "hits to keep")},
                  {{"hits.jsonl", "ranked hits"}}});

  std::vector<ParamDef> genParams{intParam("n", "100", 1, "samples"), intParam("nodes", "9", 1, "atoms per sample"),
                                  realParam("lambda", "1.0", "guidance scale")};
  for (auto& p : scheduleParams()) genParams.push_back(p);
  defs.push_back({Task::Generate,
                  "sample molecules from a score model",
                  {{"model", true, false, "score checkpoint"}, {"guide", false, false, "controller checkpoint"}},
                  std::move(genParams),
                  {{"generated.smi", "accepted molecules"},
                   {"rejections.jsonl", "quantization rejections"},
                   {"report.json", "counts by reason"}}});

  std::vector<ParamDef> optParams{choiceParam("policy", "max", {"max", "mean"}, "success threshold over the before set")};
  for (auto& p : scheduleParams()) optParams.push_back(p);
  defs.push_back({Task::Optimize,
                  "score before and after sets and report optimization success",
                  {{"before", true, false, "SMILES"}, {"after", true, false, "SMILES"}, {"scorer", true, false, "controller checkpoint"}},
                  std::move(optParams),
                  {{"optimize.json", "success, improvement rate, scores"}}});

  defs.push_back({Task::Metrics,
                  "distribution distance between two molecule sets",
                  {{"a", true, false, "SMILES"}, {"b", true, false, "SMILES"}},
                  {choiceParam("metric", "mmd", {"mmd"}, "metric"),
                   realParam("bandwidth", std::nullopt, "RBF bandwidth (median heuristic when absent)", 0.0, true)},
                  {{"metrics.json", "metric value"}}});
  return defs;
}

std::string kindName(ParamKind k) {
  switch (k) {
    case ParamKind::Int: return "integer";
    case ParamKind::Real: return "number";
    case ParamKind::Choice: return "choice";
  }
  return "text";
}

[[noreturn]] void schemaFail(const std::string& field, const std::string& message) {
  throw Error(ErrorCode::SchemaError, field + ": " + message);
}

}  // namespace

const std::vector<TaskDef>& taskDefs() {
  static const std::vector<TaskDef> defs = buildDefs();
  return defs;
}

const TaskDef& taskDef(Task t) {
  for (const auto& d : taskDefs()) {
    if (d.task == t) return d;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown task");
}

std::optional<long long> parseInt(std::string_view s) {
  long long v   = 0;
  const auto* b = s.data();
  const auto* e = s.data() + s.size();
  auto [p, ec]  = std::from_chars(b, e, v);
  if (ec != std::errc{} || p != e || s.empty()) return std::nullopt;
  return v;
}

std::optional<double> parseReal(std::string_view s) {
  if (s.empty() || std::isspace(static_cast<unsigned char>(s.front()))) return std::nullopt;
  const std::string copy(s);
  char*             end = nullptr;
  const double      v   = std::strtod(copy.c_str(), &end);
  if (end != copy.c_str() + copy.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

void checkParam(const ParamDef& def, const std::string& value) {
  const std::string field = "params." + def.name;
  double            num   = 0.0;
  switch (def.kind) {
    case ParamKind::Int: {
      auto v = parseInt(value);
      if (!v) schemaFail(field, "expected an integer, got '" + value + "'");
      num = static_cast<double>(*v);
      break;
    }
    case ParamKind::Real: {
      auto v = parseReal(value);
      if (!v) schemaFail(field, "expected a finite number, got '" + value + "'");
      num = *v;
      break;
    }
    case ParamKind::Choice:
      if (std::find(def.choices.begin(), def.choices.end(), value) == def.choices.end()) {
        std::string allowed;
        for (const auto& c : def.choices) allowed += (allowed.empty() ? "" : ", ") + c;
        schemaFail(field, "'" + value + "' is not one of " + allowed);
      }
      return;
  }
  if (def.min) {
    const bool bad = def.minExclusive ? !(num > *def.min) : !(num >= *def.min);
    if (bad) {
      std::ostringstream os;
      os << "must be " << (def.minExclusive ? "> " : ">= ") << *def.min;
      schemaFail(field, os.str());
    }
  }
}

}  // namespace detail

using detail::ParamDef;
using detail::ParamKind;
using detail::TaskDef;

void JobSpec::validate() const {
  const TaskDef& def = detail::taskDef(task);
  for (const auto& [key, value] : params) {
    auto it = std::find_if(def.params.begin(), def.params.end(), [&](const ParamDef& p) { return p.name == key; });
    if (it == def.params.end()) detail::schemaFail("params." + key, "unknown parameter for task " + std::string(taskName(task)));
    detail::checkParam(*it, value);
  }
  for (const auto& p : def.params) {
    if (p.required && !params.count(p.name)) detail::schemaFail("params." + p.name, "required");
  }
  for (const auto& [key, value] : inputs) {
    auto it = std::find_if(def.inputs.begin(), def.inputs.end(), [&](const detail::InputDef& in) {
      return in.prefix ? (key.size() > in.name.size() && key.rfind(in.name, 0) == 0) : key == in.name;
    });
    if (it == def.inputs.end()) detail::schemaFail("inputs." + key, "unknown input for task " + std::string(taskName(task)));
    if (value.empty()) detail::schemaFail("inputs." + key, "empty path");
  }
  for (const auto& in : def.inputs) {
    if (!in.required) continue;
    const bool present = in.prefix ? std::any_of(inputs.begin(), inputs.end(),
                                                 [&](const auto& kv) { return kv.first.rfind(in.name, 0) == 0; })
                                   : inputs.count(in.name) > 0;
    if (!present) detail::schemaFail("inputs." + in.name + (in.prefix ? "<id>" : ""), "required");
  }
}

JobSpec JobSpec::fromJson(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    detail::schemaFail("spec", std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) detail::schemaFail("spec", "expected an object");
  for (const auto& [key, _] : j.items()) {
    if (key != "task" && key != "inputs" && key != "params" && key != "seed") detail::schemaFail(key, "unknown field");
  }
  JobSpec spec;
  if (!j.contains("task") || !j["task"].is_string()) detail::schemaFail("task", "required string");
  const auto task = taskFromName(j["task"].get<std::string>());
  if (!task) detail::schemaFail("task", "unknown task '" + j["task"].get<std::string>() + "'");
  spec.task = *task;

  if (!j.contains("seed")) detail::schemaFail("seed", "required");
  if (!j["seed"].is_number_unsigned() && !(j["seed"].is_number_integer() && j["seed"].get<long long>() >= 0)) {
    detail::schemaFail("seed", "expected a non-negative integer");
  }
  spec.seed = j["seed"].get<uint64_t>();

  if (j.contains("inputs")) {
    if (!j["inputs"].is_object()) detail::schemaFail("inputs", "expected an object");
    for (const auto& [key, value] : j["inputs"].items()) {
      if (!value.is_string()) detail::schemaFail("inputs." + key, "expected a path string");
      spec.inputs[key] = value.get<std::string>();
    }
  }
  if (j.contains("params")) {
    if (!j["params"].is_object()) detail::schemaFail("params", "expected an object");
    for (const auto& [key, value] : j["params"].items()) {
      if (value.is_string()) {
        spec.params[key] = value.get<std::string>();
      } else if (value.is_boolean()) {
        spec.params[key] = value.get<bool>() ? "true" : "false";
      } else if (value.is_number()) {
        spec.params[key] = value.dump();
      } else {
        detail::schemaFail("params." + key, "expected a string, number or boolean");
      }
    }
  }
  spec.validate();
  return spec;
}

std::string JobSpec::toJson() const {
  json j;
  j["task"]   = std::string(taskName(task));
  j["inputs"] = json::object();
  for (const auto& [k, v] : inputs) j["inputs"][k] = v;
  j["params"] = json::object();
  for (const auto& [k, v] : params) j["params"][k] = v;
  j["seed"] = seed;
  return j.dump();
}

namespace {

json taskSchema(const TaskDef& def) {
  json t;
  t["description"] = def.help;
  t["inputs"]      = json::object();
  for (const auto& in : def.inputs) {
    json i;
    i["required"]    = in.required;
    i["description"] = in.help;
    if (in.prefix) i["pattern"] = in.name + "<id>";
    t["inputs"][in.prefix ? in.name + "<id>" : in.name] = i;
  }
  t["params"] = json::object();
  for (const auto& p : def.params) {
    json q;
    q["type"]        = detail::kindName(p.kind);
    q["required"]    = p.required;
    q["description"] = p.help;
    if (p.def) q["default"] = *p.def;
    if (!p.choices.empty()) q["choices"] = p.choices;
    if (p.min) q[p.minExclusive ? "exclusiveMinimum" : "minimum"] = *p.min;
    t["params"][p.name] = q;
  }
  t["artifacts"] = json::object();
  for (const auto& a : def.artifacts) t["artifacts"][a.name] = a.help;
  return t;
}

}  // namespace

std::string taskSchemaJson(Task t) {
  json j         = taskSchema(detail::taskDef(t));
  j["task"]      = std::string(taskName(t));
  return j.dump(2);
}

std::string jobSchemaJson() {
  json j;
  j["version"]  = std::string(toolVersion());
  j["jobspec"]  = {{"task", "string, one of the task names"},
                   {"inputs", "object: input name -> file path"},
                   {"params", "object: parameter name -> string, number or boolean"},
                   {"seed", "non-negative integer, required"}};
  j["tasks"]    = json::object();
  for (const auto& def : detail::taskDefs()) j["tasks"][std::string(taskName(def.task))] = taskSchema(def);
  j["record"]   = {{"id", "string"},
                   {"state", "queued | running | done | failed"},
                   {"sequence", "integer"},
                   {"spec", "jobspec"},
                   {"artifacts", "array of artifact names"},
                   {"log_tail", "string"},
                   {"error", "string"}};
  return j.dump(2);
}

std::vector<std::string> artifactNames(Task t) {
  std::vector<std::string> out;
  for (const auto& a : detail::taskDef(t).artifacts) out.push_back(a.name);
  return out;
}

// ---------------------------------------------------------------------------
// Hashing

namespace detail {

std::string sha256Hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int  len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::IoError, "sha256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string           out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

}  // namespace detail

std::string specHash(const JobSpec& spec) {
  json j   = json::parse(spec.toJson());
  for (const auto& [k, path] : spec.inputs) j["inputs"][k] = detail::sha256Hex(readFileBytes(path));
  return detail::sha256Hex(j.dump());
}

// ---------------------------------------------------------------------------
// Execution

namespace {

class Params {
 public:
  Params(const JobSpec& spec, const TaskDef& def) : spec_(spec), def_(def) {}

  [[nodiscard]] bool has(const std::string& name) const { return spec_.params.count(name) > 0; }

  [[nodiscard]] std::string text(const std::string& name) const {
    if (auto it = spec_.params.find(name); it != spec_.params.end()) return it->second;
    for (const auto& p : def_.params) {
      if (p.name == name && p.def) return *p.def;
    }
    throw Error(ErrorCode::SchemaError, "params." + name + ": required");
  }
  [[nodiscard]] int integer(const std::string& name) const {
    const auto v = detail::parseInt(text(name));
    if (!v || *v > std::numeric_limits<int>::max() || *v < std::numeric_limits<int>::min()) {
      throw Error(ErrorCode::SchemaError, "params." + name + ": integer out of range");
    }
    return static_cast<int>(*v);
  }
  [[nodiscard]] double real(const std::string& name) const { return *detail::parseReal(text(name)); }
  [[nodiscard]] bool   flag(const std::string& name) const { return text(name) == "true"; }

 private:
  const JobSpec& spec_;
  const TaskDef& def_;
};

std::string num(double v) {
  if (!std::isfinite(v)) return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
  return json(v).dump();
}

std::string csvField(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

class Context {
 public:
  explicit Context(const JobSpec& spec) : spec(spec), def(detail::taskDef(spec.task)), p(spec, def) {
    hash                   = specHash(spec);
    meta["tool"]           = "vscreen";
    meta["version"]        = std::string(toolVersion());
    meta["task"]           = std::string(taskName(spec.task));
    meta["spec_hash"]      = hash;
    meta["seed"]           = spec.seed;
  }

  [[nodiscard]] const std::string& input(const std::string& name) const { return spec.inputs.at(name); }
  [[nodiscard]] std::optional<std::string> optionalInput(const std::string& name) const {
    if (auto it = spec.inputs.find(name); it != spec.inputs.end()) return it->second;
    return std::nullopt;
  }

  [[nodiscard]] std::string jsonlHeader() const { return json{{"meta", meta}}.dump() + "\n"; }
  [[nodiscard]] std::string commentHeader() const { return "# " + meta.dump() + "\n"; }

  //! Runs a file-writing save function through a private temp file and returns the bytes.
  template <typename Fn> std::string viaFile(Fn&& save) const {
    static std::atomic<unsigned> counter{0};
    const auto path = std::filesystem::temp_directory_path() /
                      ("vscreen-" + hash.substr(0, 12) + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    try {
      save(path.string());
      std::string bytes = readFileBytes(path.string());
      std::filesystem::remove(path);
      return bytes;
    } catch (...) {
      std::error_code ec;
      std::filesystem::remove(path, ec);
      throw;
    }
  }

  void log(std::string line) { out.log.push_back(std::move(line)); }

  const JobSpec& spec;
  const TaskDef& def;
  Params         p;
  std::string    hash;
  json           meta;
  JobOutput      out;
};

NoiseSchedule schedule(const Params& p) { return NoiseSchedule::linear(p.integer("steps"), p.real("beta1"), p.real("betaT")); }

std::map<std::string, double> readLabels(const std::string& path) {
  std::istringstream in(readFileBytes(path));
  std::map<std::string, double> out;
  std::string line;
  std::size_t lineNo = 0;
  bool        first  = true;
  while (std::getline(in, line)) {
    ++lineNo;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto cols = detail::splitCsvLine(line);
    if (first) {
      first = false;
      if (cols.size() == 2 && cols[0] == "name" && cols[1] == "label") continue;
    }
    if (cols.size() != 2) throw Error(ErrorCode::SchemaError, path + " line " + std::to_string(lineNo) + ": expected name,label");
    const auto v = detail::parseReal(cols[1]);
    if (!v) throw Error(ErrorCode::SchemaError, path + " line " + std::to_string(lineNo) + ": bad label '" + cols[1] + "'");
    if (!out.emplace(cols[0], *v).second) {
      throw Error(ErrorCode::SchemaError, path + " line " + std::to_string(lineNo) + ": duplicate name '" + cols[0] + "'");
    }
  }
  return out;
}

std::string readFasta(const std::string& path) {
  std::istringstream in(readFileBytes(path));
  std::string line, seq;
  bool        header = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] == '>') {
      if (header || !seq.empty()) break;
      header = true;
      continue;
    }
    for (char c : line) {
      if (!std::isspace(static_cast<unsigned char>(c))) seq.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
    }
  }
  if (seq.empty()) throw Error(ErrorCode::FormatError, path + ": no sequence found");
  return seq;
}

std::vector<Molecule> loadNonEmpty(const std::string& path) {
  auto mols = loadMolecules(path);
  if (mols.empty()) throw Error(ErrorCode::EmptyDataset, path + ": no molecules");
  return mols;
}

// parse --------------------------------------------------------------------

void runParse(Context& c) {
  const auto  records = readSmilesFile(c.input("in"));
  std::string out     = c.jsonlHeader();
  int         ok      = 0;
  for (const auto& r : records) {
    json rec;
    rec["line"]  = r.line;
    rec["name"]  = r.name.empty() ? "mol" + std::to_string(r.line) : r.name;
    rec["input"] = r.smiles;
    try {
      const Molecule m   = parseSmiles(r.smiles);
      rec["ok"]          = true;
      rec["smiles"]      = writeSmiles(m);
      rec["atoms"]       = m.numAtoms();
      rec["heavy_atoms"] = m.numHeavyAtoms();
      rec["bonds"]       = m.numBonds();
      rec["rings"]       = m.ringCount();
      ++ok;
    } catch (const Error& e) {
      rec["ok"]      = false;
      rec["error"]   = std::string(errorCodeName(e.code()));
      rec["message"] = e.what();
      if (e.position()) rec["position"] = *e.position();
    }
    out += rec.dump() + "\n";
  }
  c.out.artifacts["molecules.jsonl"] = std::move(out);
  c.log("parse: " + std::to_string(records.size()) + " records, " + std::to_string(ok) + " parsed");
}

// sim ----------------------------------------------------------------------

void runSim(Context& c) {
  const auto rows = loadNonEmpty(c.input("a"));
  const auto cols = c.optionalInput("b") ? loadNonEmpty(*c.optionalInput("b")) : rows;
  SimilarityOptions opt;
  const auto        metric = c.p.text("metric");
  opt.metric       = metric == "edit" ? SimilarityMetric::Edit : metric == "wl" ? SimilarityMetric::WL : SimilarityMetric::Tanimoto;
  opt.radius       = c.p.integer("radius");
  opt.width        = c.p.integer("width");
  opt.wlIterations = c.p.integer("wl_iterations");
  const Eigen::MatrixXd m = similarityMatrix(rows, cols, opt, 1);

  std::string out = c.commentHeader() + "name";
  for (const auto& col : cols) out += "," + csvField(col.name());
  out += "\n";
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    out += csvField(rows[static_cast<std::size_t>(i)].name());
    for (Eigen::Index j = 0; j < m.cols(); ++j) out += "," + num(m(i, j));
    out += "\n";
  }
  c.out.artifacts["similarity.csv"] = std::move(out);
  c.log("sim: " + std::to_string(m.rows()) + " x " + std::to_string(m.cols()) + " " + metric);
}

// mevon --------------------------------------------------------------------

void runMevon(Context& c) {
  const auto      mols = loadNonEmpty(c.input("in"));
  EvolutionConfig cfg;
  cfg.theta1       = c.p.real("theta1");
  cfg.theta2       = c.p.real("theta2");
  cfg.stage1       = c.p.text("stage1") == "edit" ? Stage1Metric::Edit : Stage1Metric::Fingerprint;
  cfg.wlIterations = c.p.integer("wl_iterations");
  cfg.fpRadius     = c.p.integer("radius");
  cfg.fpWidth      = c.p.integer("width");
  EvolutionGraph g = linkPairs(buildHierarchy(mols), cfg);

  if (auto labelsPath = c.optionalInput("labels")) {
    const auto                         table = readLabels(*labelsPath);
    std::map<std::string, int>         index;
    std::vector<std::optional<double>> labels(mols.size());
    for (std::size_t i = 0; i < mols.size(); ++i) {
      if (!index.emplace(mols[i].name(), static_cast<int>(i)).second) {
        throw Error(ErrorCode::SchemaError, "duplicate molecule name '" + mols[i].name() + "' cannot be labelled");
      }
    }
    for (const auto& [name, v] : table) {
      auto it = index.find(name);
      if (it == index.end()) throw Error(ErrorCode::SchemaError, "labels: unknown molecule '" + name + "'");
      labels[static_cast<std::size_t>(it->second)] = v;
    }
    annotate(g, std::move(labels));
  }

  json j;
  j["meta"]   = c.meta;
  j["config"] = {{"theta1", cfg.theta1},
                 {"theta2", cfg.theta2},
                 {"stage1", c.p.text("stage1")},
                 {"wl_iterations", cfg.wlIterations},
                 {"radius", cfg.fpRadius},
                 {"width", cfg.fpWidth}};
  j["nodes"] = json::array();
  for (std::size_t i = 0; i < g.hierarchy.molecules.size(); ++i) {
    const auto& m = g.hierarchy.molecules[i];
    json        n{{"id", i}, {"name", m.name()}, {"smiles", writeSmiles(m)}, {"heavy_atoms", m.numHeavyAtoms()}};
    n["label"] = (i < g.labels.size() && g.labels[i]) ? json(*g.labels[i]) : json(nullptr);
    j["nodes"].push_back(n);
  }
  j["layers"] = json::array();
  for (const auto& l : g.hierarchy.layers) j["layers"].push_back({{"heavy_atoms", l.heavyAtoms}, {"members", l.members}});
  j["edges"] = json::array();
  for (const auto& e : g.edges) {
    json ej{{"parent", e.parent}, {"child", e.child}, {"stage1", e.stage1}, {"stage2", e.stage2}};
    const auto d = g.labels.empty() ? std::nullopt : g.edgeDelta(e);
    ej["delta"]  = d ? json(*d) : json(nullptr);
    j["edges"].push_back(ej);
  }
  j["isolated"]                 = g.isolated;
  c.out.artifacts["graph.json"] = j.dump(2) + "\n";
  c.log("mevon: " + std::to_string(mols.size()) + " nodes, " + std::to_string(g.edges.size()) + " edges, " +
        std::to_string(g.isolated.size()) + " isolated");
}

// kg -----------------------------------------------------------------------

void runKg(Context& c) {
  const NumericKG kg = buildNumericKg(c.p.real("min"), c.p.real("max"), c.p.real("step"));
  MarginConfig    cfg;
  cfg.dim          = c.p.integer("dim");
  cfg.gamma        = c.p.real("gamma");
  cfg.metric       = c.p.text("metric") == "l1" ? KgMetric::L1 : KgMetric::L2;
  cfg.epochs       = c.p.integer("epochs");
  cfg.learningRate = c.p.real("lr");
  cfg.maxNorm      = c.p.real("max_norm");
  cfg.seed         = c.spec.seed;
  const KgTrainResult res = trainKg(kg, cfg);

  const std::string metaText = c.meta.dump();
  c.out.artifacts["table.bin"] = c.viaFile([&](const std::string& path) { saveEmbeddingTable(path, kg, res.table, metaText); });

  const double acc = kgDirectionalAccuracy(kg, res.table, cfg);
  json         j;
  j["meta"]                        = c.meta;
  j["entities"]                    = kg.numEntities();
  j["relations"]                   = kg.relations;
  j["triplets"]                    = kg.triplets.size();
  j["dim"]                         = cfg.dim;
  j["max_norm"]                    = entityNormBound(kg, cfg);
  j["initial_loss"]                = res.lossTrace.front();
  j["final_loss"]                  = res.lossTrace.back();
  j["directional_accuracy"]        = acc;
  j["loss_trace"]                  = res.lossTrace;
  c.out.artifacts["report.json"]   = j.dump(2) + "\n";
  c.log("kg: " + std::to_string(kg.numEntities()) + " entities, final loss " + num(res.lossTrace.back()) +
        ", directional accuracy " + num(acc));
}

// domains ------------------------------------------------------------------

void runDomains(Context& c) {
  const int  radius = c.p.integer("radius");
  const int  width  = c.p.integer("width");
  const auto target = fingerprintDomain("target", loadNonEmpty(c.input("target")), radius, width);
  std::vector<DomainSample> sources;
  for (const auto& [key, path] : c.spec.inputs) {
    if (key.rfind("source.", 0) != 0) continue;
    sources.push_back(fingerprintDomain(key.substr(7), loadNonEmpty(path), radius, width));
  }
  int k = c.p.integer("k");
  if (k == 0) k = static_cast<int>(sources.size());
  const auto ranked = selectSources(target, sources, k, 1);

  std::string out = c.commentHeader() + "rank,id,distance\n";
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    out += std::to_string(i + 1) + "," + csvField(ranked[i].id) + "," + num(ranked[i].distance) + "\n";
  }
  c.out.artifacts["ranking.csv"] = std::move(out);
  c.log("domains: " + std::to_string(sources.size()) + " sources, kept " + std::to_string(ranked.size()));
}

// train --------------------------------------------------------------------

TrainConfig trainConfig(const Context& c) {
  TrainConfig t;
  t.seed        = c.spec.seed;
  t.epochs      = c.p.integer("epochs");
  t.lr          = c.p.real("lr");
  t.batchSize   = c.p.integer("batch");
  t.cosineDecay = c.p.flag("cosine");
  return t;
}

std::string lossCsv(const Context& c, const std::vector<double>& trace) {
  std::string out = c.commentHeader() + "epoch,loss\n";
  for (std::size_t i = 0; i < trace.size(); ++i) out += std::to_string(i + 1) + "," + num(trace[i]) + "\n";
  return out;
}

double moleculeProperty(const Molecule& m, const std::string& property) {
  if (property == "rings") return m.ringCount();
  if (property == "heavy_atoms") return static_cast<double>(m.numHeavyAtoms());
  if (property == "bonds") return static_cast<double>(m.numBonds());
  int count = 0;
  for (const auto& a : m.atoms()) {
    if (property == "aromatic_atoms" ? a.aromatic : (a.element != Element::C && a.element != Element::H)) ++count;
  }
  return count;
}

void runTrain(Context& c) {
  const std::string head     = c.p.text("head");
  const std::string metaText = c.meta.dump();
  const TrainConfig tc       = trainConfig(c);
  std::vector<double> trace;

  if (head == "score" || head == "controller") {
    const auto mols  = loadNonEmpty(c.input("data"));
    const auto sched = schedule(c.p);
    std::vector<DiffusionState> states;
    states.reserve(mols.size());
    for (const auto& m : mols) states.push_back(DiffusionState::fromTensors(toTensors(m)));
    const int hidden = c.p.has("hidden") ? c.p.integer("hidden") : 32;
    if (head == "score") {
      ScoreConfig sc;
      sc.hidden = hidden;
      sc.layers = c.p.integer("layers");
      auto res  = trainScore(states, sched, sc, tc);
      trace     = res.lossTrace;
      c.out.artifacts["model.bin"] = c.viaFile([&](const std::string& path) { saveScoreModel(path, res.model, metaText); });
    } else {
      std::vector<double> targets(mols.size());
      if (auto labelsPath = c.optionalInput("labels")) {
        const auto table = readLabels(*labelsPath);
        for (std::size_t i = 0; i < mols.size(); ++i) {
          auto it = table.find(mols[i].name());
          if (it == table.end()) throw Error(ErrorCode::SchemaError, "labels: no label for molecule '" + mols[i].name() + "'");
          targets[i] = it->second;
        }
      } else {
        const auto property = c.p.text("property");
        for (std::size_t i = 0; i < mols.size(); ++i) targets[i] = moleculeProperty(mols[i], property);
      }
      ControllerConfig cc;
      cc.hidden = hidden;
      cc.layers = c.p.integer("layers");
      auto res  = trainController(states, targets, sched, cc, tc);
      trace     = res.lossTrace;
      c.out.artifacts["model.bin"] = c.viaFile([&](const std::string& path) { saveController(path, res.controller, metaText); });
    }
    c.log("train: head=" + head + " molecules=" + std::to_string(mols.size()));
  } else {
    ModelConfig mc;
    mc.task           = headTaskFromName(head);
    mc.hidden         = c.p.has("hidden") ? c.p.integer("hidden") : 64;
    mc.layers         = c.p.integer("layers");
    mc.graphDim       = c.p.integer("graph_dim");
    mc.headHidden     = c.p.integer("head_hidden");
    mc.dtaObjective   = c.p.text("dta_objective") == "classification" ? DtaObjective::Classification : DtaObjective::Regression;
    mc.proteinK       = c.p.integer("protein_k");
    mc.proteinWindows = c.p.integer("protein_windows");
    mc.proteinDim     = c.p.integer("protein_dim");
    mc.alignDim       = c.p.integer("align_dim");
    mc.contrastiveWeight = c.p.real("contrastive_weight");
    mc.temperature       = c.p.real("temperature");

    const Dataset data = loadDataset(mc.task, c.input("data"));
    std::optional<std::pair<NumericKG, EmbeddingTable>> kg;
    ValueEmbedder                                       embedder;
    if (auto tablePath = c.optionalInput("kg_table")) {
      kg = loadEmbeddingTable(*tablePath);
      if (mc.alignDim == 0) mc.alignDim = kg->second.dim();
      embedder.kg    = &kg->first;
      embedder.table = &kg->second;
    }
    const TrainResult res = trainHead(data, mc, tc, kg ? &embedder : nullptr);
    trace                 = res.lossTrace;
    c.out.artifacts["model.bin"] = c.viaFile([&](const std::string& path) { saveCheckpoint(path, res.params, metaText); });
    c.log("train: head=" + head + " records=" + std::to_string(data.size()));
  }
  c.out.artifacts["loss.csv"] = lossCsv(c, trace);
  if (!trace.empty()) c.log("train: final loss " + num(trace.back()));
}

// predict / screen ---------------------------------------------------------

void runPredict(Context& c) {
  const ModelParams model = loadCheckpoint(c.input("model"));
  const Dataset     data  = loadDataset(model.config.task, c.input("data"));
  const auto        preds = predict(model, data);
  std::string       out   = c.jsonlHeader();
  for (std::size_t i = 0; i < preds.size(); ++i) {
    out += json{{"index", i}, {"prediction", preds[i]}, {"label", data.label(i)}}.dump() + "\n";
  }
  c.out.artifacts["predictions.jsonl"] = std::move(out);
  c.log("predict: " + std::to_string(preds.size()) + " records, head=" + std::string(headTaskName(model.config.task)));
}

void runScreen(Context& c) {
  const std::string sequence = readFasta(c.input("target"));
  const auto        library  = loadNonEmpty(c.input("library"));
  const ModelParams model    = loadCheckpoint(c.input("model"));
  const auto        hits     = screenLibrary(library, sequence, model, c.p.integer("top"));
  std::string       out      = c.jsonlHeader();
  for (std::size_t r = 0; r < hits.size(); ++r) {
    const auto& h = hits[r];
    out += json{{"rank", r + 1}, {"index", h.index}, {"name", h.name}, {"smiles", writeSmiles(library[h.index])}, {"score", h.score}}
               .dump() +
           "\n";
  }
  c.out.artifacts["hits.jsonl"] = std::move(out);
  c.log("screen: " + std::to_string(library.size()) + " molecules, kept " + std::to_string(hits.size()));
}

// generate / optimize / metrics --------------------------------------------

void runGenerate(Context& c) {
  const ScoreModel              model = loadScoreModel(c.input("model"));
  std::optional<Controller>     guide;
  if (auto g = c.optionalInput("guide")) guide = loadController(*g);
  const auto             sched  = schedule(c.p);
  const double           lambda = c.p.real("lambda");
  const std::vector<int> sizes(static_cast<std::size_t>(c.p.integer("n")), c.p.integer("nodes"));
  const GeneratedBatch   batch = generateMolecules(model, sched, sizes, guide ? &*guide : nullptr, lambda, c.spec.seed);

  std::string smi = c.commentHeader();
  std::size_t m   = 0;
  std::vector<bool> rejected(sizes.size(), false);
  for (const auto& [k, _] : batch.rejections) rejected[k] = true;
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    if (rejected[k]) continue;
    smi += writeSmiles(batch.molecules[m++]) + "\tgen" + std::to_string(k) + "\n";
  }
  std::string rej = c.jsonlHeader();
  for (const auto& [k, r] : batch.rejections) {
    rej += json{{"sample", k}, {"reason", std::string(rejectReasonName(r.reason))}, {"detail", r.detail}}.dump() + "\n";
  }
  json report;
  report["meta"]     = c.meta;
  report["samples"]  = batch.stats.total;
  report["accepted"] = batch.molecules.size();
  report["rejected"] = batch.stats.rejected();
  report["valid_fraction"] =
      batch.stats.total > 0 ? static_cast<double>(batch.molecules.size()) / static_cast<double>(batch.stats.total) : 0.0;
  report["by_reason"] = json::object();
  for (const auto& [reason, count] : batch.stats.counts) {
    if (reason != RejectReason::None) report["by_reason"][std::string(rejectReasonName(reason))] = count;
  }
  report["guided"] = guide.has_value();
  report["lambda"] = guide ? lambda : 0.0;

  c.out.artifacts["generated.smi"]    = std::move(smi);
  c.out.artifacts["rejections.jsonl"] = std::move(rej);
  c.out.artifacts["report.json"]      = report.dump(2) + "\n";
  c.log("generate: " + std::to_string(batch.molecules.size()) + " of " + std::to_string(sizes.size()) + " accepted");
}

void runOptimize(Context& c) {
  const auto       before = loadNonEmpty(c.input("before"));
  const auto       after  = loadNonEmpty(c.input("after"));
  const Controller scorer = loadController(c.input("scorer"));
  const auto       sched  = schedule(c.p);
  std::vector<double> sb, sa;
  for (const auto& m : before) sb.push_back(controllerScore(scorer, m, sched));
  for (const auto& m : after) sa.push_back(controllerScore(scorer, m, sched));
  const auto policy = c.p.text("policy") == "mean" ? SuccessPolicy::MeanOfBefore : SuccessPolicy::MaxOfBefore;
  const auto o      = optimizeSuccess(sb, sa, policy);
  json       j;
  j["meta"]             = c.meta;
  j["policy"]           = c.p.text("policy");
  j["success"]          = o.success;
  j["improvement_rate"] = o.improvementRate;
  j["mean_before"]      = o.meanBefore;
  j["mean_after"]       = o.meanAfter;
  j["before"]           = sb;
  j["after"]            = sa;
  c.out.artifacts["optimize.json"] = j.dump(2) + "\n";
  c.log(std::string("optimize: success=") + (o.success ? "true" : "false") + " improvement " + num(o.improvementRate));
}

void runMetrics(Context& c) {
  const auto a = loadNonEmpty(c.input("a"));
  const auto b = loadNonEmpty(c.input("b"));
  const std::optional<double> bw = c.p.has("bandwidth") ? std::optional<double>(c.p.real("bandwidth")) : std::nullopt;
  const double used  = bw ? *bw : medianBandwidth(a, b);
  const double value = mmdMetric(a, b, used);
  json         j;
  j["meta"]      = c.meta;
  j["metric"]    = c.p.text("metric");
  j["value"]     = value;
  j["bandwidth"] = used;
  j["n_a"]       = a.size();
  j["n_b"]       = b.size();
  c.out.artifacts["metrics.json"] = j.dump(2) + "\n";
  c.log("metrics: mmd " + num(value));
}

}  // namespace

JobOutput runJob(const JobSpec& spec) {
  spec.validate();
  Context c(spec);
  switch (spec.task) {
    case Task::Parse: runParse(c); break;
    case Task::Sim: runSim(c); break;
    case Task::Mevon: runMevon(c); break;
    case Task::Kg: runKg(c); break;
    case Task::Domains: runDomains(c); break;
    case Task::Train: runTrain(c); break;
    case Task::Predict: runPredict(c); break;
    case Task::Screen: runScreen(c); break;
    case Task::Generate: runGenerate(c); break;
    case Task::Optimize: runOptimize(c); break;
    case Task::Metrics: runMetrics(c); break;
  }
  return std::move(c.out);
}

}  // namespace vscreen
