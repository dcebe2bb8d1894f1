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

#ifndef VSCREEN_MPNN_HPP
#define VSCREEN_MPNN_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vscreen/chem.hpp"
#include "vscreen/kg.hpp"

namespace vscreen {

// ---------------------------------------------------------------------------
// Protein featurization

inline constexpr std::string_view kAminoAcids = "ACDEFGHIKLMNPQRSTVWY";

struct ProteinFeatures {
  Eigen::VectorXd global;  //!< L1-normalized k-mer composition of the whole sequence
  Eigen::MatrixXd local;   //!< one composition row per contiguous window (zero row if the window has no k-mer)
};

//! Throws BadSequence for empty input or letters outside kAminoAcids.
ProteinFeatures proteinFeatures(std::string_view sequence, int k = 2, int windows = 4);
int             kmerDim(int k);

// ---------------------------------------------------------------------------
// Model

enum class HeadTask { Mpp, Dta, Ddi };
enum class DtaObjective { Regression, Classification };

std::string_view headTaskName(HeadTask t);
HeadTask         headTaskFromName(std::string_view name);

struct ModelConfig {
  HeadTask     task         = HeadTask::Mpp;
  int          hidden       = 64;  //!< node/edge state width
  int          layers       = 2;
  int          graphDim     = 64;
  int          headHidden   = 64;
  bool         evoFeature   = false;  //!< mpp: append an evolution-propagated scalar to the embedding
  DtaObjective dtaObjective = DtaObjective::Regression;
  int          proteinK       = 2;
  int          proteinWindows = 4;
  int          proteinDim     = 32;
  //! mpp: width of the value-embedding alignment projection; 0 disables the contrastive term.
  int          alignDim          = 0;
  double       contrastiveWeight = 0.5;
  double       temperature       = 0.1;

  void validate() const;
};

struct ModelParams {
  ModelConfig                            config;
  std::map<std::string, Eigen::MatrixXd> tensors;
  bool                                   trained = false;

  [[nodiscard]] std::size_t numScalars() const;
};

//! Weights and biases uniform in +-1/sqrt(fan_in); gates zero.
ModelParams initParams(const ModelConfig& config, uint64_t seed);

//! Disjoint union of molecular graphs with per-node and per-edge graph indices.
struct GraphBatch {
  Eigen::MatrixXd  nodeFeatures;  //!< N x kAtomFeatureDim
  Eigen::MatrixXd  edgeFeatures;  //!< E x 4 bond-type one-hot (single, double, triple, aromatic)
  std::vector<int> edgeBegin;
  std::vector<int> edgeEnd;
  std::vector<int> nodeGraph;
  std::vector<int> edgeGraph;
  int              numGraphs = 0;
};

GraphBatch makeBatch(std::span<const Molecule* const> mols);
GraphBatch makeBatch(std::span<const Molecule> mols);
//! Reads bonds from the upper triangle of A. Throws ShapeMismatch.
GraphBatch makeBatch(const GraphTensors& tensors);

//! Graph embeddings, one row per graph.
Eigen::MatrixXd mpForward(const GraphBatch& batch, const ModelParams& params);
Eigen::VectorXd mpForward(const GraphTensors& tensors, const ModelParams& params);

// ---------------------------------------------------------------------------
// Datasets

struct MppRecord {
  Molecule              mol;
  double                label = 0.0;
  std::optional<double> evo;
};

struct DtaRecord {
  Molecule    mol;
  std::string sequence;
  double      label = 0.0;
};

struct DdiRecord {
  Molecule a;
  Molecule b;
  double   label = 0.0;
};

struct Dataset {
  HeadTask               task = HeadTask::Mpp;
  std::vector<MppRecord> mpp;
  std::vector<DtaRecord> dta;
  std::vector<DdiRecord> ddi;

  [[nodiscard]] std::size_t size() const;
  [[nodiscard]] double      label(std::size_t i) const;
  [[nodiscard]] Dataset     subset(std::span<const std::size_t> indices) const;
};

/**
 * CSV with a header row. Required columns: mpp smiles,label (optional evo); dta
 * smiles,sequence,label; ddi smiles_a,smiles_b,label. Throws SchemaError / EmptyDataset.
 */
Dataset parseDataset(HeadTask task, std::string_view csv);
Dataset loadDataset(HeadTask task, const std::string& path);

//! Value embeddings for the contrastive alignment term.
struct ValueEmbedder {
  const NumericKG*      kg    = nullptr;
  const EmbeddingTable* table = nullptr;
};

// ---------------------------------------------------------------------------
// Losses, training, inference

//! Symmetric InfoNCE over cosine similarity / temperature with diagonal targets.
double contrastiveAlignLoss(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& values, double temperature);

//! Training objective of the head on the given records.
double datasetLoss(const ModelParams& params, const Dataset& data, const ValueEmbedder* values = nullptr);

struct GradientMap {
  double                                 loss = 0.0;
  std::map<std::string, Eigen::MatrixXd> grads;
};
GradientMap lossGradient(const ModelParams& params, const Dataset& data, const ValueEmbedder* values = nullptr);

/**
 * Max over parameter entries of |analytic - numeric| / max(|analytic|, |numeric|, floor),
 * with central differences of step h. maxEntriesPerTensor = 0 checks every entry.
 */
double gradCheck(const ModelParams& params, const Dataset& data, double h = 1e-4, const ValueEmbedder* values = nullptr,
                 int maxEntriesPerTensor = 0, double floor = 1e-3);

struct TrainConfig {
  uint64_t seed      = 0;
  int      epochs    = 30;
  double   lr        = 1e-3;
  int      batchSize = 32;
  //! Anneal the step size from lr to 0 over the run along a half cosine.
  bool     cosineDecay = true;

  void validate() const;
};

struct TrainResult {
  ModelParams         params;
  std::vector<double> lossTrace;  //!< mean minibatch loss per epoch
};

//! Seeded minibatch training with Adam. Throws EmptyDataset, SchemaError.
TrainResult trainHead(const Dataset& data, const ModelConfig& config, const TrainConfig& train,
                      const ValueEmbedder* values = nullptr);

//! Per-record outputs (regression value or probability), each record evaluated on its own.
std::vector<double> predict(const ModelParams& params, const Dataset& data);
double              ddiScore(const ModelParams& params, const Molecule& a, const Molecule& b);

struct ScreenHit {
  std::size_t index = 0;
  std::string name;
  double      score = 0.0;
};

//! Scores every ligand against `protein`; descending, ties by input order, first topN.
std::vector<ScreenHit> screenLibrary(std::span<const Molecule> library, std::string_view protein, const ModelParams& params,
                                     int topN);

/**
 * Checkpoint: "VSMODEL1" magic, uint32 version, config JSON, uint8 trained flag,
 * uint32 tensor count, then (name, rows, cols, row-major float32) per tensor.
 * A non-empty `meta` (JSON object text) is stored under the config's "meta" key.
 */
void        saveCheckpoint(const std::string& path, const ModelParams& params, std::string_view meta = {});
ModelParams loadCheckpoint(const std::string& path);

}  // namespace vscreen

#endif  // VSCREEN_MPNN_HPP
