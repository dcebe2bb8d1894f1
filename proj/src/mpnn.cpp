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

#include "vscreen/mpnn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <json.hpp>

#include "adam.hpp"
#include "csv.hpp"
#include "vscreen/autodiff.hpp"
#include "vscreen/binary_io.hpp"
#include "vscreen/errors.hpp"

namespace vscreen {

using ad::Tape;
using ad::Var;

// ---------------------------------------------------------------------------
// Protein featurization

int kmerDim(int k) {
  int d = 1;
  for (int i = 0; i < k; ++i) d *= static_cast<int>(kAminoAcids.size());
  return d;
}

namespace {

Eigen::VectorXd kmerComposition(std::span<const int> codes, int k) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(kmerDim(k));
  if (static_cast<int>(codes.size()) < k) return v;
  for (std::size_t i = 0; i + static_cast<std::size_t>(k) <= codes.size(); ++i) {
    int idx = 0;
    for (int j = 0; j < k; ++j) idx = idx * static_cast<int>(kAminoAcids.size()) + codes[i + static_cast<std::size_t>(j)];
    v[idx] += 1.0;
  }
  return v / v.sum();
}

}  // namespace

ProteinFeatures proteinFeatures(std::string_view sequence, int k, int windows) {
  if (k < 1 || k > 3) throw Error(ErrorCode::InvalidArgument, "k-mer size must be 1..3");
  if (windows < 1) throw Error(ErrorCode::InvalidArgument, "window count must be positive");
  if (sequence.empty()) throw Error(ErrorCode::BadSequence, "empty protein sequence");
  std::vector<int> codes;
  codes.reserve(sequence.size());
  for (std::size_t i = 0; i < sequence.size(); ++i) {
    const auto pos = kAminoAcids.find(sequence[i]);
    if (pos == std::string_view::npos) {
      throw Error(ErrorCode::BadSequence, std::string("residue '") + sequence[i] + "' is not one of the 20 standard amino acids", i);
    }
    codes.push_back(static_cast<int>(pos));
  }
  ProteinFeatures f;
  f.global = kmerComposition(codes, k);
  f.local.resize(windows, kmerDim(k));
  const std::size_t n = codes.size();
  for (int w = 0; w < windows; ++w) {
    const std::size_t lo = n * static_cast<std::size_t>(w) / static_cast<std::size_t>(windows);
    const std::size_t hi = n * static_cast<std::size_t>(w + 1) / static_cast<std::size_t>(windows);
    f.local.row(w) = kmerComposition(std::span<const int>(codes).subspan(lo, hi - lo), k).transpose();
  }
  return f;
}

// ---------------------------------------------------------------------------
// Configuration and parameters

std::string_view headTaskName(HeadTask t) {
  switch (t) {
    case HeadTask::Mpp: return "mpp";
    case HeadTask::Dta: return "dta";
    case HeadTask::Ddi: return "ddi";
  }
  return "mpp";
}

HeadTask headTaskFromName(std::string_view name) {
  if (name == "mpp") return HeadTask::Mpp;
  if (name == "dta") return HeadTask::Dta;
  if (name == "ddi") return HeadTask::Ddi;
  throw Error(ErrorCode::InvalidArgument, "unknown task '" + std::string(name) + "' (expected mpp, dta or ddi)");
}

void ModelConfig::validate() const {
  if (hidden < 1 || graphDim < 1 || headHidden < 1) throw Error(ErrorCode::InvalidArgument, "layer widths must be positive");
  if (layers < 0) throw Error(ErrorCode::InvalidArgument, "layer count must be non-negative");
  if (proteinK < 1 || proteinK > 3 || proteinWindows < 1 || proteinDim < 1) {
    throw Error(ErrorCode::InvalidArgument, "invalid protein featurization settings");
  }
  if (alignDim < 0) throw Error(ErrorCode::InvalidArgument, "alignDim must be non-negative");
  if (!(temperature > 0.0)) throw Error(ErrorCode::InvalidArgument, "temperature must be positive");
  if (!(contrastiveWeight >= 0.0)) throw Error(ErrorCode::InvalidArgument, "contrastive weight must be non-negative");
}

void TrainConfig::validate() const {
  if (epochs < 0) throw Error(ErrorCode::InvalidArgument, "epochs must be non-negative");
  if (!(lr > 0.0)) throw Error(ErrorCode::InvalidArgument, "learning rate must be positive");
  if (batchSize < 1) throw Error(ErrorCode::InvalidArgument, "batch size must be positive");
}

std::size_t ModelParams::numScalars() const {
  std::size_t n = 0;
  for (const auto& [name, t] : tensors) n += static_cast<std::size_t>(t.size());
  return n;
}

namespace {

constexpr int kBondFeatureDim = 4;

enum class Init { Weight, Bias, Zero };

struct Shape {
  std::string name;
  int         rows;
  int         cols;
  Init        init;
};

std::vector<Shape> parameterShapes(const ModelConfig& c) {
  const int          h = c.hidden;
  std::vector<Shape> s{{"enc.node.W", static_cast<int>(kAtomFeatureDim), h, Init::Weight},
                       {"enc.node.b", 1, h, Init::Bias},
                       {"enc.edge.W", kBondFeatureDim, h, Init::Weight},
                       {"enc.edge.b", 1, h, Init::Bias}};
  for (int l = 0; l < c.layers; ++l) {
    const std::string p = "mp" + std::to_string(l) + ".";
    s.push_back({p + "node_msg.W", h, h, Init::Weight});
    s.push_back({p + "node_upd.W", 2 * h, h, Init::Weight});
    s.push_back({p + "node_upd.b", 1, h, Init::Bias});
    s.push_back({p + "edge_from_nodes.W", h, h, Init::Weight});
    s.push_back({p + "edge_from_edges.W", h, h, Init::Weight});
    s.push_back({p + "edge_upd.W", 2 * h, h, Init::Weight});
    s.push_back({p + "edge_upd.b", 1, h, Init::Bias});
  }
  s.push_back({"readout.W", 2 * h, c.graphDim, Init::Weight});
  s.push_back({"readout.b", 1, c.graphDim, Init::Bias});
  int headIn = c.graphDim;
  switch (c.task) {
    case HeadTask::Mpp:
      if (c.evoFeature) headIn += 1;
      if (c.alignDim > 0) s.push_back({"align.W", c.graphDim, c.alignDim, Init::Weight});
      break;
    case HeadTask::Dta: {
      const int kd = kmerDim(c.proteinK);
      s.push_back({"prot.global.W", kd, c.proteinDim, Init::Weight});
      s.push_back({"prot.global.b", 1, c.proteinDim, Init::Bias});
      s.push_back({"prot.local.W", kd * c.proteinWindows, c.proteinDim, Init::Weight});
      s.push_back({"prot.local.b", 1, c.proteinDim, Init::Bias});
      s.push_back({"gate.drug", 1, 1, Init::Zero});
      s.push_back({"gate.global", 1, 1, Init::Zero});
      s.push_back({"gate.local", 1, 1, Init::Zero});
      headIn += 2 * c.proteinDim;
      break;
    }
    case HeadTask::Ddi: headIn = 2 * c.graphDim; break;
  }
  s.push_back({"head.fc1.W", headIn, c.headHidden, Init::Weight});
  s.push_back({"head.fc1.b", 1, c.headHidden, Init::Bias});
  s.push_back({"head.fc2.W", c.headHidden, 1, Init::Weight});
  s.push_back({"head.fc2.b", 1, 1, Init::Bias});
  return s;
}

void checkParams(const ModelParams& params) {
  for (const auto& s : parameterShapes(params.config)) {
    auto it = params.tensors.find(s.name);
    if (it == params.tensors.end()) throw Error(ErrorCode::ShapeMismatch, "missing parameter " + s.name);
    if (it->second.rows() != s.rows || it->second.cols() != s.cols) {
      throw Error(ErrorCode::ShapeMismatch, "parameter " + s.name + " has shape " + std::to_string(it->second.rows()) + "x" +
                                                std::to_string(it->second.cols()) + ", expected " + std::to_string(s.rows) + "x" +
                                                std::to_string(s.cols));
    }
  }
}

}  // namespace

ModelParams initParams(const ModelConfig& config, uint64_t seed) {
  config.validate();
  ModelParams p;
  p.config = config;
  std::mt19937_64 rng(seed);
  const auto shapes = parameterShapes(config);
  for (const auto& s : shapes) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(s.rows, s.cols);
    if (s.init != Init::Zero) {
      // Biases share the fan-in of their weight matrix.
      int fanIn = s.rows;
      if (s.init == Init::Bias) {
        const std::string w = s.name.substr(0, s.name.size() - 1) + "W";
        for (const auto& o : shapes) {
          if (o.name == w) fanIn = o.rows;
        }
      }
      const double                           bound = 1.0 / std::sqrt(static_cast<double>(fanIn));
      std::uniform_real_distribution<double> u(-bound, bound);
      for (int i = 0; i < s.rows; ++i) {
        for (int j = 0; j < s.cols; ++j) m(i, j) = u(rng);
      }
    }
    p.tensors.emplace(s.name, std::move(m));
  }
  return p;
}

// ---------------------------------------------------------------------------
// Graph batches

GraphBatch makeBatch(std::span<const Molecule* const> mols) {
  GraphBatch b;
  b.numGraphs = static_cast<int>(mols.size());
  std::size_t nodes = 0;
  std::size_t edges = 0;
  for (const auto* m : mols) {
    nodes += m->numAtoms();
    edges += m->numBonds();
  }
  b.nodeFeatures = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(nodes), static_cast<Eigen::Index>(kAtomFeatureDim));
  b.edgeFeatures = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(edges), kBondFeatureDim);
  int nodeBase = 0;
  int edgeRow  = 0;
  for (int g = 0; g < b.numGraphs; ++g) {
    const Molecule& mol = *mols[static_cast<std::size_t>(g)];
    for (std::size_t i = 0; i < mol.numAtoms(); ++i) {
      const auto&        atom = mol.atom(i);
      const Eigen::Index row  = nodeBase + static_cast<Eigen::Index>(i);
      b.nodeFeatures(row, static_cast<Eigen::Index>(atom.element)) = 1.0;
      b.nodeFeatures(row, kNumElements)                            = atom.charge;
      b.nodeFeatures(row, kNumElements + 1)                        = atom.aromatic ? 1.0 : 0.0;
      b.nodeGraph.push_back(g);
    }
    for (const auto& bond : mol.bonds()) {
      const int type = bond.order == BondOrder::Aromatic ? 3 : static_cast<int>(bond.order) - 1;
      b.edgeFeatures(edgeRow++, type) = 1.0;
      b.edgeBegin.push_back(nodeBase + bond.begin);
      b.edgeEnd.push_back(nodeBase + bond.end);
      b.edgeGraph.push_back(g);
    }
    nodeBase += static_cast<int>(mol.numAtoms());
  }
  return b;
}

GraphBatch makeBatch(std::span<const Molecule> mols) {
  std::vector<const Molecule*> ptrs;
  for (const auto& m : mols) ptrs.push_back(&m);
  return makeBatch(std::span<const Molecule* const>(ptrs));
}

GraphBatch makeBatch(const GraphTensors& t) {
  const auto n = t.X.rows();
  if (t.X.cols() != static_cast<Eigen::Index>(kAtomFeatureDim) || t.A.rows() != n || t.A.cols() != n) {
    throw Error(ErrorCode::ShapeMismatch, "graph tensors must be X: n x " + std::to_string(kAtomFeatureDim) + ", A: n x n");
  }
  if (!t.X.allFinite() || !t.A.allFinite()) throw Error(ErrorCode::ShapeMismatch, "graph tensors contain non-finite values");
  GraphBatch b;
  b.numGraphs    = 1;
  b.nodeFeatures = t.X;
  b.nodeGraph.assign(static_cast<std::size_t>(n), 0);
  std::vector<std::array<double, kBondFeatureDim>> rows;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double v = t.A(i, j);
      if (v != t.A(j, i)) throw Error(ErrorCode::ShapeMismatch, "adjacency is not symmetric");
      if (v == 0.0) continue;
      int type = -1;
      if (v == 1.0) type = 0;
      if (v == 2.0) type = 1;
      if (v == 3.0) type = 2;
      if (v == 1.5) type = 3;
      if (type < 0) throw Error(ErrorCode::ShapeMismatch, "adjacency entry " + std::to_string(v) + " is not a bond order");
      std::array<double, kBondFeatureDim> r{};
      r[static_cast<std::size_t>(type)] = 1.0;
      rows.push_back(r);
      b.edgeBegin.push_back(static_cast<int>(i));
      b.edgeEnd.push_back(static_cast<int>(j));
      b.edgeGraph.push_back(0);
    }
  }
  b.edgeFeatures.resize(static_cast<Eigen::Index>(rows.size()), kBondFeatureDim);
  for (std::size_t e = 0; e < rows.size(); ++e) {
    for (int k = 0; k < kBondFeatureDim; ++k) b.edgeFeatures(static_cast<Eigen::Index>(e), k) = rows[e][static_cast<std::size_t>(k)];
  }
  return b;
}

// ---------------------------------------------------------------------------
// Forward graph

namespace {

class Bound {
 public:
  Bound(Tape& tape, const ModelParams& params, bool trainable) : tape_(tape) {
    for (const auto& [name, value] : params.tensors) vars_.emplace(name, trainable ? tape.param(value) : tape.constant(value));
  }
  Var operator[](const std::string& name) const {
    auto it = vars_.find(name);
    if (it == vars_.end()) throw Error(ErrorCode::ShapeMismatch, "missing parameter " + name);
    return it->second;
  }
  Var dense(const std::string& prefix, Var x) const { return tape_.addRow(tape_.matmul(x, (*this)[prefix + ".W"]), (*this)[prefix + ".b"]); }
  [[nodiscard]] const std::map<std::string, Var>& vars() const { return vars_; }

 private:
  Tape&                      tape_;
  std::map<std::string, Var> vars_;
};

Var encode(Tape& t, const Bound& p, const ModelConfig& c, const GraphBatch& b) {
  const int n = static_cast<int>(b.nodeFeatures.rows());
  const int e = static_cast<int>(b.edgeFeatures.rows());
  Var       hv = t.relu(p.dense("enc.node", t.constant(b.nodeFeatures)));
  Var       he = t.relu(p.dense("enc.edge", t.constant(b.edgeFeatures)));
  std::vector<int> endEdge;
  std::vector<int> endNode;
  for (int k = 0; k < e; ++k) {
    endEdge.push_back(k);
    endNode.push_back(b.edgeBegin[static_cast<std::size_t>(k)]);
    endEdge.push_back(k);
    endNode.push_back(b.edgeEnd[static_cast<std::size_t>(k)]);
  }
  for (int l = 0; l < c.layers; ++l) {
    const std::string pre = "mp" + std::to_string(l) + ".";
    // Per-node sum of incident edge states.
    Var incident = t.scatterSumRows(t.gatherRows(he, endEdge), endNode, n);
    Var mv       = t.matmul(incident, p[pre + "node_msg.W"]);
    const Var nodeIn[2] = {hv, mv};
    Var hvNext   = t.relu(p.dense(pre + "node_upd", t.concatCols(nodeIn)));

    Var endpoints = t.add(t.gatherRows(hv, b.edgeBegin), t.gatherRows(hv, b.edgeEnd));
    Var around    = t.sub(t.add(t.gatherRows(incident, b.edgeBegin), t.gatherRows(incident, b.edgeEnd)), t.scale(he, 2.0));
    Var me        = t.add(t.matmul(endpoints, p[pre + "edge_from_nodes.W"]), t.matmul(around, p[pre + "edge_from_edges.W"]));
    const Var edgeIn[2] = {he, me};
    he = t.relu(p.dense(pre + "edge_upd", t.concatCols(edgeIn)));
    hv = hvNext;
  }
  const Var pooled[2] = {t.segmentMean(hv, b.nodeGraph, b.numGraphs), t.segmentMean(he, b.edgeGraph, b.numGraphs)};
  return p.dense("readout", t.concatCols(pooled));
}

Var headMlp(Tape& t, const Bound& p, Var z) { return p.dense("head.fc2", t.relu(p.dense("head.fc1", z))); }

Var contrastiveOnTape(Tape& t, Var pred, Var values, double temperature) {
  Var logits = t.scale(t.cosineMatrix(pred, values), 1.0 / temperature);
  return t.scale(t.add(t.diagonalCrossEntropy(logits, false), t.diagonalCrossEntropy(logits, true)), 0.5);
}

struct ProteinBlock {
  Eigen::MatrixXd global;
  Eigen::MatrixXd local;
};

ProteinBlock proteinBlock(const ModelConfig& c, std::span<const std::string* const> seqs) {
  const int    kd = kmerDim(c.proteinK);
  ProteinBlock blk{Eigen::MatrixXd(static_cast<Eigen::Index>(seqs.size()), kd),
                   Eigen::MatrixXd(static_cast<Eigen::Index>(seqs.size()), kd * c.proteinWindows)};
  std::map<std::string_view, ProteinFeatures> cache;
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    auto it = cache.find(*seqs[i]);
    if (it == cache.end()) it = cache.emplace(*seqs[i], proteinFeatures(*seqs[i], c.proteinK, c.proteinWindows)).first;
    blk.global.row(static_cast<Eigen::Index>(i)) = it->second.global.transpose();
    for (int w = 0; w < c.proteinWindows; ++w) {
      blk.local.block(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(w) * kd, 1, kd) = it->second.local.row(w);
    }
  }
  return blk;
}

struct Outputs {
  Var raw;  //!< B x 1 regression value or logit
  Var embedding;
  Var loss;
};

bool isLogitHead(const ModelConfig& c) {
  return c.task == HeadTask::Ddi || (c.task == HeadTask::Dta && c.dtaObjective == DtaObjective::Classification);
}

Outputs forwardRecords(Tape& t, const Bound& p, const ModelConfig& c, const Dataset& data, std::span<const std::size_t> idx,
                       const ValueEmbedder* values) {
  Outputs         out;
  Eigen::MatrixXd labels(static_cast<Eigen::Index>(idx.size()), 1);
  for (std::size_t k = 0; k < idx.size(); ++k) labels(static_cast<Eigen::Index>(k), 0) = data.label(idx[k]);

  if (c.task == HeadTask::Ddi) {
    std::vector<const Molecule*> as;
    std::vector<const Molecule*> bs;
    for (std::size_t i : idx) {
      as.push_back(&data.ddi[i].a);
      bs.push_back(&data.ddi[i].b);
    }
    Var       e1      = encode(t, p, c, makeBatch(std::span<const Molecule* const>(as)));
    Var       e2      = encode(t, p, c, makeBatch(std::span<const Molecule* const>(bs)));
    const Var pair[2] = {t.abs(t.sub(e1, e2)), t.mul(e1, e2)};
    out.embedding     = e1;
    out.raw           = headMlp(t, p, t.concatCols(pair));
    out.loss          = t.bceWithLogits(out.raw, labels);
    return out;
  }

  std::vector<const Molecule*> mols;
  for (std::size_t i : idx) mols.push_back(c.task == HeadTask::Mpp ? &data.mpp[i].mol : &data.dta[i].mol);
  Var e         = encode(t, p, c, makeBatch(std::span<const Molecule* const>(mols)));
  out.embedding = e;

  if (c.task == HeadTask::Mpp) {
    Var z = e;
    if (c.evoFeature) {
      Eigen::MatrixXd evo(static_cast<Eigen::Index>(idx.size()), 1);
      for (std::size_t k = 0; k < idx.size(); ++k) {
        const auto& v = data.mpp[idx[k]].evo;
        if (!v) throw Error(ErrorCode::SchemaError, "record " + std::to_string(idx[k]) + " lacks the evo feature the model expects");
        evo(static_cast<Eigen::Index>(k), 0) = *v;
      }
      const Var parts[2] = {e, t.constant(std::move(evo))};
      z                  = t.concatCols(parts);
    }
    out.raw  = headMlp(t, p, z);
    out.loss = t.maeLoss(out.raw, labels);
    if (c.alignDim > 0 && c.contrastiveWeight > 0.0 && values != nullptr) {
      if (values->kg == nullptr || values->table == nullptr) throw Error(ErrorCode::InvalidArgument, "value embedder is incomplete");
      if (values->table->dim() != c.alignDim) {
        throw Error(ErrorCode::DimensionMismatch, "value embedding width " + std::to_string(values->table->dim()) +
                                                      " differs from alignDim " + std::to_string(c.alignDim));
      }
      Eigen::MatrixXd target(static_cast<Eigen::Index>(idx.size()), c.alignDim);
      for (std::size_t k = 0; k < idx.size(); ++k) {
        target.row(static_cast<Eigen::Index>(k)) = embedValue(*values->table, *values->kg, data.mpp[idx[k]].label).transpose();
      }
      Var align = contrastiveOnTape(t, t.matmul(e, p["align.W"]), t.constant(std::move(target)), c.temperature);
      out.loss  = t.add(out.loss, t.scale(align, c.contrastiveWeight));
    }
    return out;
  }

  std::vector<const std::string*> seqs;
  for (std::size_t i : idx) seqs.push_back(&data.dta[i].sequence);
  const auto blk     = proteinBlock(c, seqs);
  Var        global  = t.relu(p.dense("prot.global", t.constant(blk.global)));
  Var        local   = t.relu(p.dense("prot.local", t.constant(blk.local)));
  const Var  fused[3] = {t.scaleBy(e, t.sigmoid(p["gate.drug"])), t.scaleBy(global, t.sigmoid(p["gate.global"])),
                         t.scaleBy(local, t.sigmoid(p["gate.local"]))};
  out.raw  = headMlp(t, p, t.concatCols(fused));
  out.loss = c.dtaObjective == DtaObjective::Classification ? t.bceWithLogits(out.raw, labels) : t.mseLoss(out.raw, labels);
  return out;
}

std::vector<std::size_t> allIndices(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

void requireRecords(const Dataset& data, const ModelConfig& c) {
  if (data.task != c.task) throw Error(ErrorCode::SchemaError, "dataset task does not match the model head");
  if (data.size() == 0) throw Error(ErrorCode::EmptyDataset, "dataset has no records");
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

Eigen::MatrixXd mpForward(const GraphBatch& batch, const ModelParams& params) {
  checkParams(params);
  if (batch.nodeFeatures.cols() != static_cast<Eigen::Index>(kAtomFeatureDim) || batch.edgeFeatures.cols() != kBondFeatureDim ||
      batch.nodeGraph.size() != static_cast<std::size_t>(batch.nodeFeatures.rows()) ||
      batch.edgeBegin.size() != static_cast<std::size_t>(batch.edgeFeatures.rows())) {
    throw Error(ErrorCode::ShapeMismatch, "graph batch arrays are inconsistent");
  }
  Tape  t;
  Bound p(t, params, false);
  return t.value(encode(t, p, params.config, batch));
}

Eigen::VectorXd mpForward(const GraphTensors& tensors, const ModelParams& params) {
  return mpForward(makeBatch(tensors), params).row(0).transpose();
}

// ---------------------------------------------------------------------------
// Datasets

std::size_t Dataset::size() const {
  switch (task) {
    case HeadTask::Mpp: return mpp.size();
    case HeadTask::Dta: return dta.size();
    case HeadTask::Ddi: return ddi.size();
  }
  return 0;
}

double Dataset::label(std::size_t i) const {
  switch (task) {
    case HeadTask::Mpp: return mpp.at(i).label;
    case HeadTask::Dta: return dta.at(i).label;
    case HeadTask::Ddi: return ddi.at(i).label;
  }
  return 0.0;
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset d;
  d.task = task;
  for (std::size_t i : indices) {
    switch (task) {
      case HeadTask::Mpp: d.mpp.push_back(mpp.at(i)); break;
      case HeadTask::Dta: d.dta.push_back(dta.at(i)); break;
      case HeadTask::Ddi: d.ddi.push_back(ddi.at(i)); break;
    }
  }
  return d;
}

namespace {

double parseNumber(const std::string& s, std::size_t line, const std::string& column) {
  std::size_t used = 0;
  double      v    = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (s.empty() || used != s.size() || !std::isfinite(v)) {
    throw Error(ErrorCode::SchemaError, "line " + std::to_string(line) + ": column '" + column + "' is not a number: '" + s + "'");
  }
  return v;
}

Molecule parseField(const std::string& smiles, std::size_t line, const std::string& column) {
  try {
    return parseSmiles(smiles);
  } catch (const Error& e) {
    throw Error(ErrorCode::SchemaError, "line " + std::to_string(line) + ": column '" + column + "': " + e.what());
  }
}

}  // namespace

Dataset parseDataset(HeadTask task, std::string_view csv) {
  Dataset data;
  data.task = task;
  std::vector<std::string> required;
  switch (task) {
    case HeadTask::Mpp: required = {"smiles", "label"}; break;
    case HeadTask::Dta: required = {"smiles", "sequence", "label"}; break;
    case HeadTask::Ddi: required = {"smiles_a", "smiles_b", "label"}; break;
  }
  std::map<std::string, std::size_t> col;
  std::size_t                        width  = 0;
  std::size_t                        lineNo = 0;
  std::size_t                        start  = 0;
  bool                               header = false;
  while (start < csv.size()) {
    auto end = csv.find('\n', start);
    if (end == std::string_view::npos) end = csv.size();
    std::string_view line = csv.substr(start, end - start);
    start                 = end + 1;
    ++lineNo;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos || line.front() == '#') continue;
    auto fields = detail::splitCsvLine(line);
    if (!header) {
      for (std::size_t i = 0; i < fields.size(); ++i) col[fields[i]] = i;
      for (const auto& r : required) {
        if (!col.count(r)) throw Error(ErrorCode::SchemaError, "missing required column '" + r + "' for task " + std::string(headTaskName(task)));
      }
      width  = fields.size();
      header = true;
      continue;
    }
    if (fields.size() != width) {
      throw Error(ErrorCode::SchemaError, "line " + std::to_string(lineNo) + ": expected " + std::to_string(width) + " fields, got " +
                                              std::to_string(fields.size()));
    }
    const double label = parseNumber(fields[col["label"]], lineNo, "label");
    auto         named = [&](Molecule m) {
      if (col.count("name")) m.setName(fields[col["name"]]);
      return m;
    };
    switch (task) {
      case HeadTask::Mpp: {
        MppRecord r{named(parseField(fields[col["smiles"]], lineNo, "smiles")), label, std::nullopt};
        if (col.count("evo") && !fields[col["evo"]].empty()) r.evo = parseNumber(fields[col["evo"]], lineNo, "evo");
        data.mpp.push_back(std::move(r));
        break;
      }
      case HeadTask::Dta: {
        const auto& seq = fields[col["sequence"]];
        try {
          (void)proteinFeatures(seq, 1, 1);
        } catch (const Error& e) {
          throw Error(ErrorCode::SchemaError, "line " + std::to_string(lineNo) + ": column 'sequence': " + e.what());
        }
        data.dta.push_back({named(parseField(fields[col["smiles"]], lineNo, "smiles")), seq, label});
        break;
      }
      case HeadTask::Ddi:
        if (label != 0.0 && label != 1.0) throw Error(ErrorCode::SchemaError, "line " + std::to_string(lineNo) + ": ddi labels must be 0 or 1");
        data.ddi.push_back({parseField(fields[col["smiles_a"]], lineNo, "smiles_a"), parseField(fields[col["smiles_b"]], lineNo, "smiles_b"),
                            label});
        break;
    }
  }
  if (!header) throw Error(ErrorCode::SchemaError, "missing header row");
  if (data.size() == 0) throw Error(ErrorCode::EmptyDataset, "dataset has no records");
  return data;
}

Dataset loadDataset(HeadTask task, const std::string& path) { return parseDataset(task, readFileBytes(path)); }

// ---------------------------------------------------------------------------
// Losses and gradients

double contrastiveAlignLoss(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& values, double temperature) {
  if (pred.rows() != values.rows() || pred.cols() != values.cols()) {
    throw Error(ErrorCode::BatchMismatch, "prediction and value batches differ in shape");
  }
  if (!(temperature > 0.0)) throw Error(ErrorCode::InvalidArgument, "temperature must be positive");
  if (pred.rows() == 0) throw Error(ErrorCode::BatchMismatch, "empty batch");
  Tape t;
  return t.value(contrastiveOnTape(t, t.constant(pred), t.constant(values), temperature))(0, 0);
}

double datasetLoss(const ModelParams& params, const Dataset& data, const ValueEmbedder* values) {
  checkParams(params);
  requireRecords(data, params.config);
  Tape       t;
  Bound      p(t, params, false);
  const auto idx = allIndices(data.size());
  return t.value(forwardRecords(t, p, params.config, data, idx, values).loss)(0, 0);
}

namespace {

GradientMap gradientOn(const ModelParams& params, const Dataset& data, std::span<const std::size_t> idx, const ValueEmbedder* values) {
  Tape  t;
  Bound p(t, params, true);
  Var   loss = forwardRecords(t, p, params.config, data, idx, values).loss;
  t.backward(loss);
  GradientMap g;
  g.loss = t.value(loss)(0, 0);
  for (const auto& [name, v] : p.vars()) g.grads.emplace(name, t.grad(v));
  return g;
}

}  // namespace

GradientMap lossGradient(const ModelParams& params, const Dataset& data, const ValueEmbedder* values) {
  checkParams(params);
  requireRecords(data, params.config);
  const auto idx = allIndices(data.size());
  return gradientOn(params, data, idx, values);
}

double gradCheck(const ModelParams& params, const Dataset& data, double h, const ValueEmbedder* values, int maxEntriesPerTensor,
                 double floor) {
  const auto analytic = lossGradient(params, data, values);
  double     worst    = 0.0;
  ModelParams probe   = params;
  for (const auto& [name, g] : analytic.grads) {
    auto&             tensor = probe.tensors.at(name);
    const Eigen::Index n      = tensor.size();
    Eigen::Index       stride = 1;
    if (maxEntriesPerTensor > 0 && n > maxEntriesPerTensor) stride = (n + maxEntriesPerTensor - 1) / maxEntriesPerTensor;
    for (Eigen::Index k = 0; k < n; k += stride) {
      const double orig  = tensor.data()[k];
      tensor.data()[k]   = orig + h;
      const double plus  = datasetLoss(probe, data, values);
      tensor.data()[k]   = orig - h;
      const double minus = datasetLoss(probe, data, values);
      tensor.data()[k]   = orig;
      const double num   = (plus - minus) / (2.0 * h);
      const double a     = g.data()[k];
      worst              = std::max(worst, std::abs(a - num) / std::max({std::abs(a), std::abs(num), floor}));
    }
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Training

TrainResult trainHead(const Dataset& data, const ModelConfig& config, const TrainConfig& train, const ValueEmbedder* values) {
  train.validate();
  requireRecords(data, config);
  if (config.alignDim > 0 && config.contrastiveWeight > 0.0 && values == nullptr) {
    throw Error(ErrorCode::InvalidArgument, "alignment head needs value embeddings");
  }
  if (config.task == HeadTask::Dta && config.dtaObjective == DtaObjective::Classification) {
    for (const auto& r : data.dta) {
      if (r.label != 0.0 && r.label != 1.0) throw Error(ErrorCode::SchemaError, "classification labels must be 0 or 1");
    }
  }
  TrainResult result;
  result.params = initParams(config, train.seed);
  std::mt19937_64 rng(train.seed ^ 0x5DEECE66DULL);

  const std::size_t perEpoch = (data.size() + static_cast<std::size_t>(train.batchSize) - 1) / static_cast<std::size_t>(train.batchSize);
  detail::Adam      adam(result.params.tensors, train.lr, static_cast<long>(perEpoch) * train.epochs, train.cosineDecay);

  auto order = allIndices(data.size());
  for (int epoch = 0; epoch < train.epochs; ++epoch) {
    detail::shuffleIndices(order, rng);
    double lossSum = 0.0;
    int    batches = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += static_cast<std::size_t>(train.batchSize)) {
      const std::size_t end = std::min(order.size(), begin + static_cast<std::size_t>(train.batchSize));
      const auto        g   = gradientOn(result.params, data, std::span<const std::size_t>(order).subspan(begin, end - begin), values);
      adam.step(result.params.tensors, g.grads);
      lossSum += g.loss;
      ++batches;
    }
    result.lossTrace.push_back(lossSum / batches);
  }
  result.params.trained = true;
  return result;
}

// ---------------------------------------------------------------------------
// Inference

std::vector<double> predict(const ModelParams& params, const Dataset& data) {
  checkParams(params);
  if (data.task != params.config.task) throw Error(ErrorCode::SchemaError, "dataset task does not match the model head");
  std::vector<double> out;
  out.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data.task == HeadTask::Ddi) {
      out.push_back(ddiScore(params, data.ddi[i].a, data.ddi[i].b));
      continue;
    }
    Tape                      t;
    Bound                     p(t, params, false);
    const std::size_t         one[1] = {i};
    const double              raw    = t.value(forwardRecords(t, p, params.config, data, one, nullptr).raw)(0, 0);
    out.push_back(isLogitHead(params.config) ? sigmoid(raw) : raw);
  }
  return out;
}

double ddiScore(const ModelParams& params, const Molecule& a, const Molecule& b) {
  checkParams(params);
  if (params.config.task != HeadTask::Ddi) throw Error(ErrorCode::SchemaError, "model is not a ddi head");
  Tape        t;
  Bound       p(t, params, false);
  const auto& c  = params.config;
  Var         e1 = encode(t, p, c, makeBatch(std::span<const Molecule>(&a, 1)));
  Var         e2 = encode(t, p, c, makeBatch(std::span<const Molecule>(&b, 1)));
  const Var   pair[2] = {t.abs(t.sub(e1, e2)), t.mul(e1, e2)};
  return sigmoid(t.value(headMlp(t, p, t.concatCols(pair)))(0, 0));
}

std::vector<ScreenHit> screenLibrary(std::span<const Molecule> library, std::string_view protein, const ModelParams& params, int topN) {
  if (params.config.task != HeadTask::Dta) throw Error(ErrorCode::SchemaError, "screening needs a dta model");
  if (!params.trained) throw Error(ErrorCode::UntrainedModel, "model parameters were never trained");
  (void)proteinFeatures(protein, params.config.proteinK, params.config.proteinWindows);
  if (topN < 0) throw Error(ErrorCode::InvalidArgument, "top_n must be non-negative");
  Dataset data;
  data.task = HeadTask::Dta;
  for (const auto& m : library) data.dta.push_back({m, std::string(protein), 0.0});
  const auto scores = predict(params, data);
  std::vector<ScreenHit> hits;
  for (std::size_t i = 0; i < library.size(); ++i) {
    hits.push_back({i, library[i].name().empty() ? writeSmiles(library[i]) : library[i].name(), scores[i]});
  }
  std::stable_sort(hits.begin(), hits.end(), [](const ScreenHit& x, const ScreenHit& y) { return x.score > y.score; });
  hits.resize(std::min(hits.size(), static_cast<std::size_t>(topN)));
  return hits;
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

constexpr char     kModelMagic[] = "VSMODEL1";
constexpr uint32_t kModelVersion = 1;

nlohmann::json configToJson(const ModelConfig& c) {
  return {{"task", headTaskName(c.task)},
          {"hidden", c.hidden},
          {"layers", c.layers},
          {"graph_dim", c.graphDim},
          {"head_hidden", c.headHidden},
          {"evo_feature", c.evoFeature},
          {"dta_objective", c.dtaObjective == DtaObjective::Classification ? "classification" : "regression"},
          {"protein_k", c.proteinK},
          {"protein_windows", c.proteinWindows},
          {"protein_dim", c.proteinDim},
          {"align_dim", c.alignDim},
          {"contrastive_weight", c.contrastiveWeight},
          {"temperature", c.temperature}};
}

ModelConfig configFromJson(const nlohmann::json& j) {
  ModelConfig c;
  try {
    c.task           = headTaskFromName(j.at("task").get<std::string>());
    c.hidden         = j.at("hidden").get<int>();
    c.layers         = j.at("layers").get<int>();
    c.graphDim       = j.at("graph_dim").get<int>();
    c.headHidden     = j.at("head_hidden").get<int>();
    c.evoFeature     = j.at("evo_feature").get<bool>();
    c.dtaObjective   = j.at("dta_objective").get<std::string>() == "classification" ? DtaObjective::Classification : DtaObjective::Regression;
    c.proteinK       = j.at("protein_k").get<int>();
    c.proteinWindows = j.at("protein_windows").get<int>();
    c.proteinDim     = j.at("protein_dim").get<int>();
    c.alignDim       = j.at("align_dim").get<int>();
    c.contrastiveWeight = j.at("contrastive_weight").get<double>();
    c.temperature       = j.at("temperature").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::FormatError, std::string("bad model config: ") + e.what());
  }
  c.validate();
  return c;
}

}  // namespace

void saveCheckpoint(const std::string& path, const ModelParams& params, std::string_view meta) {
  checkParams(params);
  auto config = configToJson(params.config);
  if (!meta.empty()) config["meta"] = nlohmann::json::parse(meta);
  BinaryWriter w;
  w.bytes(std::string_view(kModelMagic, 8));
  w.scalar<uint32_t>(kModelVersion);
  w.str(config.dump());
  w.scalar<uint8_t>(params.trained ? 1 : 0);
  w.scalar<uint32_t>(static_cast<uint32_t>(params.tensors.size()));
  for (const auto& [name, t] : params.tensors) {
    w.str(name);
    w.matrix(t);
  }
  writeFileBytes(path, w.data());
}

ModelParams loadCheckpoint(const std::string& path) {
  BinaryReader r(readFileBytes(path));
  if (r.bytes(8) != std::string_view(kModelMagic, 8)) throw Error(ErrorCode::FormatError, path + " is not a model checkpoint");
  if (r.scalar<uint32_t>() != kModelVersion) throw Error(ErrorCode::FormatError, "unsupported checkpoint version");
  ModelParams p;
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(r.str());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::FormatError, std::string("bad model config: ") + e.what());
  }
  p.config        = configFromJson(j);
  p.trained       = r.scalar<uint8_t>() != 0;
  const auto count = r.scalar<uint32_t>();
  for (uint32_t i = 0; i < count; ++i) {
    std::string name = r.str();
    p.tensors.emplace(std::move(name), r.matrix());
  }
  if (!r.atEnd()) throw Error(ErrorCode::FormatError, "trailing bytes in checkpoint");
  try {
    checkParams(p);
  } catch (const Error& e) {
    throw Error(ErrorCode::FormatError, e.what());
  }
  return p;
}

}  // namespace vscreen
