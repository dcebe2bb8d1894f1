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

#ifndef VSCREEN_PIPELINE_HPP
#define VSCREEN_PIPELINE_HPP

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace vscreen {

std::string_view toolVersion();

enum class Task { Parse, Sim, Mevon, Kg, Domains, Train, Predict, Screen, Generate, Optimize, Metrics };

std::string_view    taskName(Task t);
std::optional<Task> taskFromName(std::string_view name);

/**
 * One unit of work. Inputs are named file paths; params is a flat key -> value table
 * whose values are kept as text. The seed is always explicit once serialized.
 */
struct JobSpec {
  Task                               task = Task::Parse;
  std::map<std::string, std::string> inputs;
  std::map<std::string, std::string> params;
  uint64_t                           seed = 0;

  //! Parses and validates. Throws SchemaError whose message starts with the field path.
  static JobSpec fromJson(std::string_view text);
  //! Canonical form: sorted keys, params as strings.
  [[nodiscard]] std::string toJson() const;
  //! Throws SchemaError ("params.k: ...") on unknown keys, missing keys or bad values.
  void validate() const;
};

//! Published schema for every task: inputs, params (type, default, allowed values), artifacts.
std::string jobSchemaJson();
//! Schema for one task, used as CLI usage help.
std::string taskSchemaJson(Task t);

//! Artifact names a task produces, in a fixed order.
std::vector<std::string> artifactNames(Task t);

/**
 * SHA-256 over the canonical spec with every input path replaced by the SHA-256 of the
 * file contents, so the hash is independent of where the inputs live. Throws IoError.
 */
std::string specHash(const JobSpec& spec);

struct JobOutput {
  std::map<std::string, std::string> artifacts;  //!< name -> bytes
  std::vector<std::string>           log;
};

/**
 * Executes a validated spec. Every artifact carries a meta block with tool version, spec
 * hash and seed; nothing else depends on time or host. Throws vscreen::Error.
 */
JobOutput runJob(const JobSpec& spec);

// ---------------------------------------------------------------------------
// Job service

enum class JobState { Queued, Running, Done, Failed };
std::string_view jobStateName(JobState s);

struct JobRecord {
  std::string              id;
  JobState                 state    = JobState::Queued;
  uint64_t                 sequence = 0;  //!< submission order
  JobSpec                  spec;
  std::vector<std::string> artifacts;
  std::string              logTail;
  std::string              error;

  [[nodiscard]] std::string toJson() const;
};

/**
 * Persistent FIFO job store under `workdir`/jobs/<id>/ (spec.json, record.json,
 * artifacts/). One worker thread executes jobs serially; records are re-read on start,
 * queued jobs resume in submission order and jobs caught running are marked failed.
 */
class JobService {
 public:
  explicit JobService(std::string workdir);
  ~JobService();
  JobService(const JobService&)            = delete;
  JobService& operator=(const JobService&) = delete;

  //! Validates (SchemaError) and enqueues.
  JobRecord                  submit(const JobSpec& spec);
  std::optional<JobRecord>   get(const std::string& id) const;
  std::optional<std::string> artifactPath(const std::string& id, const std::string& name) const;
  //! Blocks until no job is queued or running, or the timeout (seconds) passes.
  bool                       waitIdle(double timeoutSeconds) const;
  [[nodiscard]] std::size_t  pending() const;

  void start();
  void stop();

 private:
  void        workerLoop();
  void        persist(const JobRecord& r) const;
  std::string jobDir(const std::string& id) const;

  std::string                      workdir_;
  mutable std::mutex               mutex_;
  mutable std::condition_variable  changed_;
  std::map<std::string, JobRecord> records_;
  std::deque<std::string>          queue_;
  uint64_t                         nextSequence_ = 0;
  bool                             running_      = false;
  bool                             stopping_     = false;
  bool                             busy_         = false;
  std::thread                      worker_;
};

//! Minimal HTTP front end: POST /jobs, GET /jobs/{id}, GET /jobs/{id}/artifacts/{name}, GET /health, GET /schema.
class HttpFrontend {
 public:
  explicit HttpFrontend(JobService& service);
  ~HttpFrontend();
  HttpFrontend(const HttpFrontend&)            = delete;
  HttpFrontend& operator=(const HttpFrontend&) = delete;

  //! Binds and serves in a background thread; port 0 picks a free port. Returns the bound port.
  int  start(const std::string& host, int port);
  //! Serves on the calling thread until stop().
  void run(const std::string& host, int port);
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace vscreen

#endif  // VSCREEN_PIPELINE_HPP
