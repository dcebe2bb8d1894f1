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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numeric>
#include <random>

#include "oracles.hpp"
#include "vscreen/binary_io.hpp"
#include "vscreen/errors.hpp"
#include "vscreen/mpnn.hpp"
#include "vscreen/similarity.hpp"

using namespace vscreen;

namespace {

const char* const kProtein = "MKTAYIAKQRQISFVKSHFSRQLEERLGLIEVQAPILSRVGDGTQDNLSGAEKAVQVKVKALPDAQFEVVHSLAKWKRQTLGQHDFSAGEGLYTHMK";

const std::vector<std::string> kFive{"CCO", "c1ccccc1O", "CC(=O)Nc1ccc(O)cc1", "C1CC1C#N", "O=C([O-])C[NH3+]"};

ModelConfig smallConfig(HeadTask task) {
  ModelConfig c;
  c.task       = task;
  c.hidden     = 6;
  c.graphDim   = 5;
  c.headHidden = 4;
  c.proteinK   = 1;
  c.proteinDim = 3;
  return c;
}

Dataset fiveRecords(HeadTask task, bool evo = false) {
  Dataset d;
  d.task = task;
  for (std::size_t i = 0; i < kFive.size(); ++i) {
    const double y = 0.2 * static_cast<double>(i) - 0.3;
    switch (task) {
      case HeadTask::Mpp: d.mpp.push_back({parseSmiles(kFive[i]), y, evo ? std::optional<double>(1.0 - y) : std::nullopt}); break;
      case HeadTask::Dta: d.dta.push_back({parseSmiles(kFive[i]), i % 2 ? kProtein : "ACDKLMW", y}); break;
      case HeadTask::Ddi: d.ddi.push_back({parseSmiles(kFive[i]), parseSmiles(kFive[(i + 2) % 5]), static_cast<double>(i % 2)}); break;
    }
  }
  return d;
}

GraphTensors permuted(const GraphTensors& t, const std::vector<int>& perm) {
  const auto   n = t.X.rows();
  GraphTensors p{Eigen::MatrixXd(n, t.X.cols()), Eigen::MatrixXd(n, n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    p.X.row(i) = t.X.row(perm[static_cast<std::size_t>(i)]);
    for (Eigen::Index j = 0; j < n; ++j) p.A(i, j) = t.A(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
  }
  return p;
}

std::string tempPath(const std::string& name) { return (std::filesystem::temp_directory_path() / name).string(); }

}  // namespace

TEST(ProteinFeatures, CompositionBlocksSumToOne) {
  const auto f = proteinFeatures(kProtein);
  EXPECT_EQ(f.global.size(), 400);
  EXPECT_EQ(f.local.rows(), 4);
  EXPECT_NEAR(f.global.sum(), 1.0, 1e-12);
  for (Eigen::Index w = 0; w < 4; ++w) EXPECT_NEAR(f.local.row(w).sum(), 1.0, 1e-12);
  EXPECT_GE(f.global.minCoeff(), 0.0);

  const auto one = proteinFeatures("AC", 1, 1);
  EXPECT_DOUBLE_EQ(one.global[0], 0.5);
  EXPECT_DOUBLE_EQ(one.global[1], 0.5);

  // Windows too short to hold a 2-mer stay zero.
  const auto tiny = proteinFeatures("ACD", 2, 4);
  EXPECT_EQ(tiny.local.row(0).sum(), 0.0);
  EXPECT_NEAR(tiny.global.sum(), 1.0, 1e-12);
}

TEST(ProteinFeatures, RejectsBadResidues) {
  try {
    (void)proteinFeatures("ACDXB");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::BadSequence);
    EXPECT_EQ(e.position(), std::optional<std::size_t>(3));
  }
  EXPECT_THROW((void)proteinFeatures(""), Error);
  EXPECT_THROW((void)proteinFeatures("acd"), Error);
}

TEST(MpForward, PermutationInvariant) {
  std::mt19937_64 rng(3);
  ModelConfig     c = smallConfig(HeadTask::Mpp);
  c.hidden          = 16;
  c.layers          = 3;
  for (int trial = 0; trial < 20; ++trial) {
    const auto params = initParams(c, static_cast<uint64_t>(trial));
    const auto t      = toTensors(parseSmiles(kFive[static_cast<std::size_t>(trial) % kFive.size()]));
    std::vector<int> perm(static_cast<std::size_t>(t.X.rows()));
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    const auto a = mpForward(t, params);
    const auto b = mpForward(permuted(t, perm), params);
    EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-6);
  }
}

TEST(MpForward, DisjointCopiesMatchSingleGraph) {
  const auto params = initParams(smallConfig(HeadTask::Mpp), 4);
  for (const auto& s : kFive) {
    const auto one = mpForward(toTensors(parseSmiles(s)), params);
    const auto two = mpForward(toTensors(parseSmiles(s + "." + s)), params);
    EXPECT_LT((one - two).cwiseAbs().maxCoeff(), 1e-12) << s;
  }
}

TEST(MpForward, ZeroParametersGiveReadoutBias) {
  auto params = initParams(smallConfig(HeadTask::Mpp), 5);
  for (auto& [name, t] : params.tensors) t.setZero();
  auto& bias = params.tensors.at("readout.b");
  for (Eigen::Index j = 0; j < bias.cols(); ++j) bias(0, j) = 0.25 * static_cast<double>(j) - 0.5;
  const auto e = mpForward(toTensors(parseSmiles("[O-]")), params);
  EXPECT_EQ(e, bias.row(0).transpose());
}

TEST(MpForward, BatchRowsMatchSingles) {
  const auto            params = initParams(smallConfig(HeadTask::Mpp), 6);
  std::vector<Molecule> mols;
  for (const auto& s : kFive) mols.push_back(parseSmiles(s));
  const auto batch = mpForward(makeBatch(std::span<const Molecule>(mols)), params);
  ASSERT_EQ(batch.rows(), 5);
  for (std::size_t i = 0; i < mols.size(); ++i) {
    EXPECT_LT((batch.row(static_cast<Eigen::Index>(i)).transpose() - mpForward(toTensors(mols[i]), params)).norm(), 1e-12);
  }
}

TEST(MpForward, ShapeErrors) {
  const auto   params = initParams(smallConfig(HeadTask::Mpp), 7);
  GraphTensors bad{Eigen::MatrixXd::Zero(2, 5), Eigen::MatrixXd::Zero(2, 2)};
  try {
    (void)mpForward(bad, params);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ShapeMismatch);
  }
  auto t   = toTensors(parseSmiles("CC"));
  t.A(0, 1) = 0.7;
  t.A(1, 0) = 0.7;
  EXPECT_THROW((void)mpForward(t, params), Error);
  auto broken = params;
  broken.tensors.at("readout.W").resize(3, 3);
  EXPECT_THROW((void)mpForward(toTensors(parseSmiles("CC")), broken), Error);
}

TEST(GradCheck, EveryHeadConfiguration) {
  struct Case {
    const char* name;
    ModelConfig config;
    bool        evo;
  };
  std::vector<Case> cases;
  cases.push_back({"mpp", smallConfig(HeadTask::Mpp), false});
  cases.push_back({"mpp+evo", smallConfig(HeadTask::Mpp), true});
  cases.back().config.evoFeature = true;
  cases.push_back({"mpp+align", smallConfig(HeadTask::Mpp), false});
  cases.back().config.alignDim = 3;
  cases.push_back({"dta-regression", smallConfig(HeadTask::Dta), false});
  cases.push_back({"dta-classification", smallConfig(HeadTask::Dta), false});
  cases.back().config.dtaObjective = DtaObjective::Classification;
  cases.push_back({"ddi", smallConfig(HeadTask::Ddi), false});
  cases.push_back({"no-layers", smallConfig(HeadTask::Mpp), false});
  cases.back().config.layers = 0;

  const auto kg    = buildNumericKg(-1.0, 1.0, 0.1);
  MarginConfig mc;
  mc.dim           = 3;
  mc.epochs        = 50;
  const auto table = trainKg(kg, mc).table;
  const ValueEmbedder values{&kg, &table};

  for (const auto& c : cases) {
    auto data = fiveRecords(c.config.task, c.evo);
    if (c.config.dtaObjective == DtaObjective::Classification) {
      for (std::size_t i = 0; i < data.dta.size(); ++i) data.dta[i].label = static_cast<double>(i % 2);
    }
    const auto params = initParams(c.config, 11);
    const auto* v     = c.config.alignDim > 0 ? &values : nullptr;
    EXPECT_LT(gradCheck(params, data, 1e-4, v), 1e-4) << c.name;
  }
}

TEST(GradCheck, DefaultWidthsSampled) {
  ModelConfig c;
  c.task            = HeadTask::Dta;
  const auto params = initParams(c, 12);
  EXPECT_LT(gradCheck(params, fiveRecords(HeadTask::Dta), 1e-4, nullptr, 6), 1e-4);
}

TEST(GradCheck, ZeroGradientPoint) {
  for (auto task : {HeadTask::Mpp, HeadTask::Dta}) {
    auto params = initParams(smallConfig(task), 13);
    for (auto& [name, t] : params.tensors) t.setZero();
    auto data = fiveRecords(task);
    for (auto& r : data.mpp) r.label = 0.0;
    for (auto& r : data.dta) r.label = 0.0;
    const auto g    = lossGradient(params, data);
    double     norm = 0.0;
    for (const auto& [name, t] : g.grads) norm += t.squaredNorm();
    EXPECT_LT(std::sqrt(norm), 1e-10);
    EXPECT_EQ(g.loss, 0.0);
  }
}

TEST(Contrastive, WorkedValues) {
  EXPECT_NEAR(contrastiveAlignLoss(Eigen::MatrixXd::Constant(1, 3, 0.4), Eigen::MatrixXd::Constant(1, 3, -2.0), 0.1), 0.0, 1e-15);
  for (int b : {2, 3, 7}) {
    const Eigen::MatrixXd same = Eigen::MatrixXd::Ones(b, 4);
    EXPECT_NEAR(contrastiveAlignLoss(same, same, 0.5), std::log(static_cast<double>(b)), 1e-12);
  }
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(2, 2);
  // Two-way softmax with logits 1 and 0.
  const double expected = -std::log(std::exp(1.0) / (std::exp(1.0) + 1.0));
  EXPECT_NEAR(contrastiveAlignLoss(eye, eye, 1.0), expected, 1e-15);
  EXPECT_NEAR(expected, 0.3133, 1e-4);
}

TEST(Contrastive, NonNegativeAndChecked) {
  std::mt19937_64                  rng(14);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 50; ++trial) {
    const int b = 1 + trial % 6;
    const Eigen::MatrixXd p = Eigen::MatrixXd::NullaryExpr(b, 3, [&] { return g(rng); });
    const Eigen::MatrixXd v = Eigen::MatrixXd::NullaryExpr(b, 3, [&] { return g(rng); });
    EXPECT_GE(contrastiveAlignLoss(p, v, 0.1 + 0.1 * trial), 0.0);
  }
  try {
    (void)contrastiveAlignLoss(Eigen::MatrixXd::Ones(2, 3), Eigen::MatrixXd::Ones(3, 3), 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::BatchMismatch);
  }
  EXPECT_THROW((void)contrastiveAlignLoss(Eigen::MatrixXd::Ones(2, 3), Eigen::MatrixXd::Ones(2, 3), 0.0), Error);
}

TEST(Ddi, ScoreIsSymmetricBitwise) {
  const auto params = initParams(smallConfig(HeadTask::Ddi), 15);
  for (const auto& a : kFive) {
    for (const auto& b : kFive) {
      const auto ma = parseSmiles(a);
      const auto mb = parseSmiles(b);
      EXPECT_EQ(ddiScore(params, ma, mb), ddiScore(params, mb, ma));
    }
  }
  auto data = fiveRecords(HeadTask::Ddi);
  auto swapped = data;
  for (auto& r : swapped.ddi) std::swap(r.a, r.b);
  EXPECT_EQ(predict(params, data), predict(params, swapped));
}

TEST(Training, ConstantLabelsGiveConstantPredictions) {
  Dataset data;
  data.task = HeadTask::Mpp;
  for (const auto& s : kFive) data.mpp.push_back({parseSmiles(s), 2.5, std::nullopt});
  data.mpp.push_back({parseSmiles("CCCCCCCCN"), 2.5, std::nullopt});
  TrainConfig tc;
  tc.epochs  = 2000;
  tc.lr      = 1e-2;
  const auto r = trainHead(data, smallConfig(HeadTask::Mpp), tc);
  const auto p = predict(r.params, data);
  double     mean = 0.0;
  for (double x : p) mean += x / static_cast<double>(p.size());
  double var = 0.0;
  for (double x : p) var += (x - mean) * (x - mean) / static_cast<double>(p.size());
  EXPECT_LT(var, 1e-6);
  EXPECT_NEAR(mean, 2.5, 1e-3);
}

TEST(Training, BitReproducible) {
  TrainConfig tc;
  tc.seed      = 9;
  tc.epochs    = 5;
  tc.batchSize = 2;
  for (auto task : {HeadTask::Mpp, HeadTask::Dta, HeadTask::Ddi}) {
    const auto data = fiveRecords(task);
    const auto a    = trainHead(data, smallConfig(task), tc);
    const auto b    = trainHead(data, smallConfig(task), tc);
    EXPECT_EQ(a.lossTrace, b.lossTrace);
    for (const auto& [name, t] : a.params.tensors) EXPECT_EQ(t, b.params.tensors.at(name)) << name;
    EXPECT_TRUE(a.params.trained);
    EXPECT_EQ(a.lossTrace.size(), 5u);
  }
}

TEST(Training, AlignmentHeadTrains) {
  const auto   kg = buildNumericKg(-1.0, 1.0, 0.1);
  MarginConfig mc;
  mc.dim           = 4;
  mc.epochs        = 100;
  const auto table = trainKg(kg, mc).table;
  const ValueEmbedder values{&kg, &table};
  ModelConfig c = smallConfig(HeadTask::Mpp);
  c.alignDim    = 4;
  TrainConfig tc;
  tc.epochs    = 20;
  tc.lr        = 1e-2;
  const auto data = fiveRecords(HeadTask::Mpp);
  const auto r    = trainHead(data, c, tc, &values);
  EXPECT_LT(r.lossTrace.back(), r.lossTrace.front());
  EXPECT_THROW((void)trainHead(data, c, tc), Error);
  c.alignDim = 5;
  EXPECT_THROW((void)trainHead(data, c, tc, &values), Error);
}

TEST(Training, Errors) {
  Dataset empty;
  empty.task = HeadTask::Mpp;
  try {
    (void)trainHead(empty, smallConfig(HeadTask::Mpp), TrainConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyDataset);
  }
  try {
    (void)trainHead(fiveRecords(HeadTask::Ddi), smallConfig(HeadTask::Mpp), TrainConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SchemaError);
  }
  ModelConfig evo = smallConfig(HeadTask::Mpp);
  evo.evoFeature  = true;
  EXPECT_THROW((void)trainHead(fiveRecords(HeadTask::Mpp), evo, TrainConfig{}), Error);
  EXPECT_THROW((void)trainHead(fiveRecords(HeadTask::Mpp), smallConfig(HeadTask::Mpp), TrainConfig{0, 1, -1.0, 4}), Error);
}

TEST(Screen, RankingAndTies) {
  TrainConfig tc;
  tc.epochs          = 2;
  const auto trained = trainHead(fiveRecords(HeadTask::Dta), smallConfig(HeadTask::Dta), tc).params;

  const std::vector<Molecule> single{parseSmiles("CCN")};
  const auto                  one = screenLibrary(single, kProtein, trained, 10);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one[0].index, 0u);
  EXPECT_EQ(one[0].name, "CCN");

  std::vector<Molecule> lib;
  for (const auto& s : {"CCO", "c1ccccc1", "CCO", "CC(=O)O", "c1ccccc1"}) lib.push_back(parseSmiles(s));
  lib[1].setName("benzene");
  const auto hits = screenLibrary(lib, kProtein, trained, 5);
  ASSERT_EQ(hits.size(), 5u);
  for (std::size_t k = 0; k + 1 < hits.size(); ++k) {
    EXPECT_GE(hits[k].score, hits[k + 1].score);
    if (hits[k].score == hits[k + 1].score) EXPECT_LT(hits[k].index, hits[k + 1].index);
  }
  std::map<std::size_t, double> byIndex;
  for (const auto& h : hits) byIndex[h.index] = h.score;
  EXPECT_EQ(byIndex[0], byIndex[2]);
  EXPECT_EQ(byIndex[1], byIndex[4]);
  EXPECT_EQ(screenLibrary(lib, kProtein, trained, 2).size(), 2u);

  try {
    (void)screenLibrary(lib, "MKTZ", trained, 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::BadSequence);
  }
  try {
    (void)screenLibrary(lib, kProtein, initParams(smallConfig(HeadTask::Dta), 1), 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UntrainedModel);
  }
}

TEST(Screen, SyntheticTanimotoTask) {
  // Labels are Tanimoto similarity to a reference ligand; the reference sits in the training split.
  auto all = loadMolecules(std::string(VSCREEN_DATA_DIR) + "/corpus.smi");
  const Molecule reference = all.at(900);
  all.erase(all.begin() + 900);
  std::mt19937_64 rng(7);
  std::shuffle(all.begin(), all.end(), rng);
  all.insert(all.begin(), reference);
  const auto refFp = morganFingerprint(reference);

  Dataset train;
  Dataset test;
  train.task = test.task = HeadTask::Dta;
  for (std::size_t i = 0; i < all.size(); ++i) {
    (i < all.size() * 4 / 5 ? train : test).dta.push_back({all[i], kProtein, tanimoto(morganFingerprint(all[i]), refFp)});
  }
  ModelConfig c;
  c.task       = HeadTask::Dta;
  c.hidden     = 32;
  c.graphDim   = 32;
  c.headHidden = 32;
  c.proteinDim = 8;
  TrainConfig tc;
  tc.seed   = 1;
  tc.epochs = 50;
  tc.lr     = 2e-3;
  const auto model = trainHead(train, c, tc).params;

  std::vector<double> truth;
  for (const auto& r : test.dta) truth.push_back(r.label);
  EXPECT_GE(oracle::pearson(predict(model, test), truth), 0.8);

  const std::vector<Molecule> library(all.begin(), all.begin() + 500);
  const auto                  hits = screenLibrary(library, kProtein, model, 25);
  EXPECT_TRUE(std::any_of(hits.begin(), hits.end(), [](const ScreenHit& h) { return h.index == 0; }));
}

TEST(Checkpoint, RoundTrip) {
  ModelConfig c   = smallConfig(HeadTask::Dta);
  c.dtaObjective  = DtaObjective::Classification;
  auto params     = initParams(c, 16);
  params.trained  = true;
  const auto path = tempPath("vscreen_ckpt_test.bin");
  saveCheckpoint(path, params);
  const auto back = loadCheckpoint(path);
  EXPECT_TRUE(back.trained);
  EXPECT_EQ(back.config.dtaObjective, DtaObjective::Classification);
  EXPECT_EQ(back.config.proteinK, 1);
  ASSERT_EQ(back.tensors.size(), params.tensors.size());
  for (const auto& [name, t] : params.tensors) EXPECT_EQ(back.tensors.at(name), t.cast<float>().cast<double>()) << name;

  const auto again = tempPath("vscreen_ckpt_test2.bin");
  saveCheckpoint(again, back);
  EXPECT_EQ(readFileBytes(path), readFileBytes(again));

  writeFileBytes(path, "VSMODEL1junk");
  try {
    (void)loadCheckpoint(path);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::FormatError);
  }
  std::remove(path.c_str());
  std::remove(again.c_str());
}

TEST(Datasets, ParseSchemas) {
  const auto mpp = parseDataset(HeadTask::Mpp, "name,smiles,label,evo\nethanol,CCO,1.5,0.2\n\nphenol, c1ccccc1O ,-2,\n");
  ASSERT_EQ(mpp.size(), 2u);
  EXPECT_EQ(mpp.mpp[0].mol.name(), "ethanol");
  EXPECT_EQ(mpp.mpp[0].evo, std::optional<double>(0.2));
  EXPECT_FALSE(mpp.mpp[1].evo.has_value());
  EXPECT_EQ(mpp.label(1), -2.0);

  const auto dta = parseDataset(HeadTask::Dta, "smiles,sequence,label\r\nCCO,ACDE,0.3\r\n");
  EXPECT_EQ(dta.dta[0].sequence, "ACDE");
  const auto ddi = parseDataset(HeadTask::Ddi, "smiles_a,smiles_b,label\nCCO,CCN,1\n");
  EXPECT_EQ(ddi.ddi[0].label, 1.0);
  const std::size_t pick[] = {0};
  EXPECT_EQ(ddi.subset(pick).size(), 1u);

  auto code = [](HeadTask t, const char* csv) {
    try {
      (void)parseDataset(t, csv);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::InvalidArgument;
  };
  EXPECT_EQ(code(HeadTask::Mpp, "smiles,value\nCCO,1\n"), ErrorCode::SchemaError);
  EXPECT_EQ(code(HeadTask::Mpp, "smiles,label\nCCO,abc\n"), ErrorCode::SchemaError);
  EXPECT_EQ(code(HeadTask::Mpp, "smiles,label\nC(C,1\n"), ErrorCode::SchemaError);
  EXPECT_EQ(code(HeadTask::Mpp, "smiles,label\nCCO\n"), ErrorCode::SchemaError);
  EXPECT_EQ(code(HeadTask::Dta, "smiles,sequence,label\nCCO,AXZ,1\n"), ErrorCode::SchemaError);
  EXPECT_EQ(code(HeadTask::Ddi, "smiles_a,smiles_b,label\nC,C,0.5\n"), ErrorCode::SchemaError);
  EXPECT_EQ(code(HeadTask::Mpp, "smiles,label\n"), ErrorCode::EmptyDataset);
  EXPECT_EQ(code(HeadTask::Mpp, ""), ErrorCode::SchemaError);
}
