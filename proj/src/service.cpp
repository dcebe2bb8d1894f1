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

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <regex>

#include "pipeline_internal.hpp"
#include "vscreen/binary_io.hpp"
#include "vscreen/errors.hpp"
#include "vscreen/pipeline.hpp"

#include <httplib.h>
#include <json.hpp>

namespace vscreen {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::size_t kLogTailLines = 20;

JobState stateFromName(const std::string& s) {
  if (s == "queued") return JobState::Queued;
  if (s == "running") return JobState::Running;
  if (s == "done") return JobState::Done;
  if (s == "failed") return JobState::Failed;
  throw Error(ErrorCode::FormatError, "unknown job state '" + s + "'");
}

void writeAtomic(const fs::path& path, const std::string& data) {
  const fs::path tmp = path.string() + ".tmp";
  writeFileBytes(tmp.string(), data);
  fs::rename(tmp, path);
}

bool safeName(const std::string& s) {
  static const std::regex re("[A-Za-z0-9_.-]+");
  return std::regex_match(s, re) && s != "." && s != "..";
}

}  // namespace

std::string_view jobStateName(JobState s) {
  switch (s) {
    case JobState::Queued: return "queued";
    case JobState::Running: return "running";
    case JobState::Done: return "done";
    case JobState::Failed: return "failed";
  }
  return "unknown";
}

std::string JobRecord::toJson() const {
  json j;
  j["id"]        = id;
  j["state"]     = std::string(jobStateName(state));
  j["sequence"]  = sequence;
  j["spec"]      = json::parse(spec.toJson());
  j["artifacts"] = artifacts;
  j["log_tail"]  = logTail;
  j["error"]     = error;
  return j.dump();
}

// ---------------------------------------------------------------------------

JobService::JobService(std::string workdir) : workdir_(std::move(workdir)) {
  const fs::path jobs = fs::path(workdir_) / "jobs";
  std::error_code ec;
  fs::create_directories(jobs, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + jobs.string() + ": " + ec.message());

  std::vector<JobRecord> loaded;
  for (const auto& entry : fs::directory_iterator(jobs)) {
    const fs::path recordPath = entry.path() / "record.json";
    if (!entry.is_directory() || !fs::exists(recordPath)) continue;
    try {
      const json j = json::parse(readFileBytes(recordPath.string()));
      JobRecord  r;
      r.id        = j.at("id").get<std::string>();
      r.state     = stateFromName(j.at("state").get<std::string>());
      r.sequence  = j.at("sequence").get<uint64_t>();
      r.spec      = JobSpec::fromJson(j.at("spec").dump());
      r.artifacts = j.at("artifacts").get<std::vector<std::string>>();
      r.logTail   = j.at("log_tail").get<std::string>();
      r.error     = j.at("error").get<std::string>();
      loaded.push_back(std::move(r));
    } catch (const std::exception&) {
      continue;
    }
  }
  std::sort(loaded.begin(), loaded.end(), [](const JobRecord& a, const JobRecord& b) { return a.sequence < b.sequence; });
  for (auto& r : loaded) {
    nextSequence_ = std::max(nextSequence_, r.sequence + 1);
    if (r.state == JobState::Running) {
      r.state = JobState::Failed;
      r.error = "interrupted: service stopped while the job was running";
      persist(r);
    }
    if (r.state == JobState::Queued) queue_.push_back(r.id);
    records_.emplace(r.id, std::move(r));
  }
}

JobService::~JobService() { stop(); }

std::string JobService::jobDir(const std::string& id) const { return (fs::path(workdir_) / "jobs" / id).string(); }

void JobService::persist(const JobRecord& r) const { writeAtomic(fs::path(jobDir(r.id)) / "record.json", r.toJson() + "\n"); }

JobRecord JobService::submit(const JobSpec& spec) {
  spec.validate();
  for (const auto& [key, path] : spec.inputs) {
    std::error_code ec;
    if (!fs::is_regular_file(path, ec)) throw Error(ErrorCode::SchemaError, "inputs." + key + ": file not found: " + path);
  }
  std::lock_guard lock(mutex_);
  JobRecord r;
  r.sequence     = nextSequence_++;
  r.spec         = spec;
  const auto now = std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::system_clock::now().time_since_epoch()).count();
  r.id = detail::sha256Hex(spec.toJson() + "|" + std::to_string(now) + "|" + std::to_string(r.sequence)).substr(0, 16);

  const fs::path dir = jobDir(r.id);
  fs::create_directories(dir / "artifacts");
  writeAtomic(dir / "spec.json", spec.toJson() + "\n");
  persist(r);
  records_.emplace(r.id, r);
  queue_.push_back(r.id);
  changed_.notify_all();
  return r;
}

std::optional<JobRecord> JobService::get(const std::string& id) const {
  std::lock_guard lock(mutex_);
  auto it = records_.find(id);
  if (it == records_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::string> JobService::artifactPath(const std::string& id, const std::string& name) const {
  std::lock_guard lock(mutex_);
  auto it = records_.find(id);
  if (it == records_.end() || it->second.state != JobState::Done) return std::nullopt;
  const auto& names = it->second.artifacts;
  if (std::find(names.begin(), names.end(), name) == names.end()) return std::nullopt;
  return (fs::path(jobDir(id)) / "artifacts" / name).string();
}

bool JobService::waitIdle(double timeoutSeconds) const {
  std::unique_lock lock(mutex_);
  return changed_.wait_for(lock, std::chrono::duration<double>(timeoutSeconds), [&] { return queue_.empty() && !busy_; });
}

std::size_t JobService::pending() const {
  std::lock_guard lock(mutex_);
  return queue_.size() + (busy_ ? 1 : 0);
}

void JobService::start() {
  std::lock_guard lock(mutex_);
  if (running_) return;
  running_  = true;
  stopping_ = false;
  worker_   = std::thread([this] { workerLoop(); });
}

void JobService::stop() {
  {
    std::lock_guard lock(mutex_);
    if (!running_) return;
    stopping_ = true;
  }
  changed_.notify_all();
  if (worker_.joinable()) worker_.join();
  std::lock_guard lock(mutex_);
  running_ = false;
}

void JobService::workerLoop() {
  for (;;) {
    JobSpec     spec;
    std::string id;
    {
      std::unique_lock lock(mutex_);
      changed_.wait(lock, [&] { return stopping_ || !queue_.empty(); });
      if (stopping_) return;
      id = queue_.front();
      queue_.pop_front();
      auto& r = records_.at(id);
      r.state = JobState::Running;
      busy_   = true;
      persist(r);
      spec = r.spec;
    }
    changed_.notify_all();

    JobOutput   out;
    std::string error;
    try {
      out = runJob(spec);
      const fs::path dir = fs::path(jobDir(id)) / "artifacts";
      fs::create_directories(dir);
      for (const auto& [name, bytes] : out.artifacts) writeAtomic(dir / name, bytes);
    } catch (const std::exception& e) {
      error = e.what();
    }

    {
      std::lock_guard lock(mutex_);
      auto&           r = records_.at(id);
      std::string     tail;
      const std::size_t from = out.log.size() > kLogTailLines ? out.log.size() - kLogTailLines : 0;
      for (std::size_t i = from; i < out.log.size(); ++i) tail += out.log[i] + "\n";
      r.logTail = tail;
      if (error.empty()) {
        r.state = JobState::Done;
        r.artifacts.clear();
        for (const auto& [name, _] : out.artifacts) r.artifacts.push_back(name);
      } else {
        r.state = JobState::Failed;
        r.error = error;
      }
      persist(r);
      busy_ = false;
    }
    changed_.notify_all();
  }
}

// ---------------------------------------------------------------------------

struct HttpFrontend::Impl {
  explicit Impl(JobService& s) : service(s) {}
  JobService&     service;
  httplib::Server server;
  std::thread     thread;
};

namespace {

void sendJson(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

std::string contentType(const std::string& name) {
  auto ends = [&](std::string_view ext) {
    return name.size() >= ext.size() && name.compare(name.size() - ext.size(), ext.size(), ext) == 0;
  };
  if (ends(".jsonl")) return "application/x-ndjson";
  if (ends(".json")) return "application/json";
  if (ends(".csv")) return "text/csv";
  if (ends(".smi")) return "text/plain";
  return "application/octet-stream";
}

}  // namespace

HttpFrontend::HttpFrontend(JobService& service) : impl_(std::make_unique<Impl>(service)) {
  auto& svc = impl_->service;
  auto& srv = impl_->server;

  srv.Post("/jobs", [&svc](const httplib::Request& req, httplib::Response& res) {
    try {
      const JobRecord r = svc.submit(JobSpec::fromJson(req.body));
      res.set_header("Location", "/jobs/" + r.id);
      sendJson(res, 202, json::parse(r.toJson()));
    } catch (const Error& e) {
      std::string msg = e.what();
      const std::string prefix = std::string(errorCodeName(e.code())) + ": ";
      if (msg.rfind(prefix, 0) == 0) msg = msg.substr(prefix.size());
      const auto colon = msg.find(": ");
      json       body{{"error", "schema_violation"}, {"message", msg}};
      if (colon != std::string::npos) body["field"] = msg.substr(0, colon);
      sendJson(res, 400, body);
    }
  });

  srv.Get(R"(/jobs/([A-Za-z0-9]+))", [&svc](const httplib::Request& req, httplib::Response& res) {
    const auto r = svc.get(req.matches[1]);
    if (!r) return sendJson(res, 404, {{"error", "not_found"}, {"id", std::string(req.matches[1])}});
    sendJson(res, 200, json::parse(r->toJson()));
  });

  srv.Get(R"(/jobs/([A-Za-z0-9]+)/artifacts/([^/]+))", [&svc](const httplib::Request& req, httplib::Response& res) {
    const std::string id   = req.matches[1];
    const std::string name = req.matches[2];
    if (!svc.get(id)) return sendJson(res, 404, {{"error", "not_found"}, {"id", id}});
    const auto path = safeName(name) ? svc.artifactPath(id, name) : std::nullopt;
    if (!path) return sendJson(res, 404, {{"error", "no_such_artifact"}, {"id", id}, {"name", name}});
    res.status = 200;
    res.set_content(readFileBytes(*path), contentType(name));
  });

  srv.Get("/health", [&svc](const httplib::Request&, httplib::Response& res) {
    sendJson(res, 200, {{"status", "ok"}, {"version", std::string(toolVersion())}, {"pending", svc.pending()}});
  });

  srv.Get("/schema", [](const httplib::Request&, httplib::Response& res) {
    res.status = 200;
    res.set_content(jobSchemaJson(), "application/json");
  });

  srv.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (res.body.empty()) sendJson(res, res.status, {{"error", res.status == 404 ? "not_found" : "error"}});
  });
}

HttpFrontend::~HttpFrontend() { stop(); }

int HttpFrontend::start(const std::string& host, int port) {
  auto& srv   = impl_->server;
  const int p = port == 0 ? srv.bind_to_any_port(host) : (srv.bind_to_port(host, port) ? port : -1);
  if (p < 0) throw Error(ErrorCode::IoError, "cannot bind " + host + ":" + std::to_string(port));
  impl_->thread = std::thread([&srv] { srv.listen_after_bind(); });
  srv.wait_until_ready();
  return p;
}

void HttpFrontend::run(const std::string& host, int port) {
  if (!impl_->server.listen(host, port)) throw Error(ErrorCode::IoError, "cannot listen on " + host + ":" + std::to_string(port));
}

void HttpFrontend::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace vscreen
