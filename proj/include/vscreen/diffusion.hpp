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

#ifndef VSCREEN_DIFFUSION_HPP
#define VSCREEN_DIFFUSION_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vscreen/chem.hpp"
#include "vscreen/mpnn.hpp"

namespace vscreen {

using BoolMatrix = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

// ---------------------------------------------------------------------------
// Schedule and states

/**
 * Variance-preserving noise schedule. Steps are 1-based: beta(t) for t in 1..T,
 * alphaBar(0) = 1. Drift f_t(x) = -beta_t x / 2 and diffusion g_t = sqrt(beta_t).
 */
class NoiseSchedule {
 public:
  //! Linear ramp; requires 0 < beta1 <= betaT < 1.
  static NoiseSchedule linear(int steps = 200, double beta1 = 1e-4, double betaT = 0.02);
  //! Arbitrary betas in [0, 1], including the degenerate 0 and 1.
  static NoiseSchedule fromBetas(std::vector<double> betas);

  [[nodiscard]] int    steps() const { return static_cast<int>(betas_.size()); }
  [[nodiscard]] double beta(int t) const;
  [[nodiscard]] double alphaBar(int t) const;
  //! Small per-step feature row fed to the networks: sqrt(abar), sqrt(1 - abar), t / T.
  [[nodiscard]] Eigen::RowVector3d timeFeatures(int t) const;

 private:
  std::vector<double> betas_;
  std::vector<double> alphaBars_;  //!< index 0 is 1
};

struct DiffusionState {
  Eigen::MatrixXd   X;  //!< n x d
  Eigen::MatrixXd   A;  //!< n x n symmetric, zero diagonal
  int               t = 0;
  std::vector<bool> mask;  //!< active nodes; padding rows and columns are zero

  //! Pads to `nodes` rows (0 keeps the molecule size).
  static DiffusionState fromTensors(const GraphTensors& tensors, int nodes = 0);
  [[nodiscard]] int                   size() const { return static_cast<int>(X.rows()); }
  [[nodiscard]] std::vector<int>      activeNodes() const;
  //! Throws ShapeMismatch when the invariants do not hold.
  void validate() const;
};

struct NoisedState {
  DiffusionState  state;
  Eigen::MatrixXd epsX;
  Eigen::MatrixXd epsA;  //!< symmetric, zero diagonal
};

//! x_t = sqrt(abar_t) x_0 + sqrt(1 - abar_t) eps on active entries. Throws BadStep.
NoisedState forwardNoise(const DiffusionState& x0, int t, const NoiseSchedule& schedule, uint64_t seed);

// ---------------------------------------------------------------------------
// Networks

struct ScoreConfig {
  int nodeDim = static_cast<int>(kAtomFeatureDim);
  int hidden  = 32;
  int layers  = 2;
  int condDim = 0;  //!< width of an optional condition vector appended to every node

  void validate() const;
};

//! Noise predictor over dense graphs; parameters as named tensors.
struct ScoreModel {
  ScoreConfig                            config;
  std::map<std::string, Eigen::MatrixXd> tensors;
  bool                                   trained = false;
};

ScoreModel initScoreModel(const ScoreConfig& config, uint64_t seed);

struct StatePair {
  Eigen::MatrixXd X;
  Eigen::MatrixXd A;  //!< symmetric, zero diagonal
};

//! Predicted noise for the state at step state.t. Masked entries are zero.
StatePair predictNoise(const ScoreModel& model, const DiffusionState& xt, const NoiseSchedule& schedule,
                       const Eigen::VectorXd* cond = nullptr);

struct ScoreTrainResult {
  ScoreModel          model;
  std::vector<double> lossTrace;  //!< mean minibatch loss per epoch
};

/**
 * Denoising score matching: t uniform in 1..T, squared error between predicted and drawn
 * noise over active X entries and upper-triangle A entries. Throws EmptyDataset.
 */
ScoreTrainResult trainScore(std::span<const DiffusionState> data, const NoiseSchedule& schedule, const ScoreConfig& config,
                            const TrainConfig& train, std::span<const Eigen::VectorXd> conds = {});

struct ControllerConfig {
  int nodeDim = static_cast<int>(kAtomFeatureDim);
  int hidden  = 32;
  int layers  = 2;

  void validate() const;
};

//! Noise-aware graph regressor used for guidance.
struct Controller {
  ControllerConfig                       config;
  std::map<std::string, Eigen::MatrixXd> tensors;
  bool                                   trained = false;
};

Controller initController(const ControllerConfig& config, uint64_t seed);

struct ControllerOutput {
  double    value = 0.0;
  StatePair grad;  //!< grad.A(i, j) is the derivative for the shared entry A(i, j) = A(j, i)
};

ControllerOutput controllerEval(const Controller& controller, const DiffusionState& state, const NoiseSchedule& schedule);
//! Value on the clean graph (t = 0).
double controllerScore(const Controller& controller, const Molecule& mol, const NoiseSchedule& schedule);

struct ControllerTrainResult {
  Controller          controller;
  std::vector<double> lossTrace;
};

//! Squared-error regression on states noised at t uniform in 0..T.
ControllerTrainResult trainController(std::span<const DiffusionState> data, std::span<const double> targets,
                                      const NoiseSchedule& schedule, const ControllerConfig& config, const TrainConfig& train);

// ---------------------------------------------------------------------------
// Sampling

//! Score (gradient of log density) for X and A at state.t.
using ScoreFn = std::function<StatePair(const DiffusionState&)>;

//! Model score -eps / sqrt(1 - abar_t), plus lambda times the controller gradient when given.
ScoreFn modelScore(const ScoreModel& model, const NoiseSchedule& schedule, const Controller* controller = nullptr,
                   double lambda = 1.0, const Eigen::VectorXd* cond = nullptr);

struct SampleResult {
  DiffusionState              final;
  std::vector<DiffusionState> trajectory;  //!< x_T .. x_0 when requested
};

/**
 * Euler-Maruyama on the reverse SDE from a standard Gaussian start:
 * x_{t-1} = x_t + beta_t (x_t / 2 + score) + sqrt(beta_t) z, no noise on the last step.
 * A is updated on its upper triangle and mirrored, so it stays exactly symmetric.
 */
SampleResult sampleSde(const ScoreFn& score, const NoiseSchedule& schedule, int nodes, int nodeDim, uint64_t seed,
                       bool keepTrajectory = false);

SampleResult reverseSample(const ScoreModel& model, const NoiseSchedule& schedule, int nodes, const Controller* controller,
                           double lambda, uint64_t seed, bool keepTrajectory = false, const Eigen::VectorXd* cond = nullptr);

//! true marks entries to regenerate.
struct InpaintMask {
  std::vector<bool> nodes;
  BoolMatrix        edges;

  //! Edges regenerate when either endpoint does.
  static InpaintMask fromNodes(std::vector<bool> nodes);
};

/**
 * Replacement-method inpainting: after each reverse step, kept entries are overwritten with
 * the template noised to the new step (exactly the template at step 0). Throws MaskShapeMismatch.
 */
SampleResult inpaintSde(const ScoreFn& score, const NoiseSchedule& schedule, const GraphTensors& templ, const InpaintMask& mask,
                        uint64_t seed, bool keepTrajectory = false);
SampleResult inpaintSample(const ScoreModel& model, const NoiseSchedule& schedule, const GraphTensors& templ,
                           const InpaintMask& mask, const Controller* controller, double lambda, uint64_t seed);

// ---------------------------------------------------------------------------
// Discretization

enum class RejectReason { None, Empty, ValenceUnrepairable, Invalid };
std::string_view rejectReasonName(RejectReason r);

struct QuantizeResult {
  std::optional<Molecule> molecule;
  RejectReason            reason = RejectReason::None;
  std::string             detail;
};

/**
 * Active X rows -> argmax element, charge rounded into [-1, 1], aromatic flag above 0.5.
 * A upper triangle -> nearest of {0, 1, 2, 3} (0.5 bands); between two aromatic atoms
 * [1.25, 1.75) reads as aromatic. Over-valent atoms lose one order from their weakest
 * (smallest A) unlocked bond until valid.
 */
QuantizeResult quantizeGraph(const DiffusionState& state, const BoolMatrix* locked = nullptr);

struct RejectionStats {
  std::map<RejectReason, int> counts;
  int                         total = 0;

  void               add(RejectReason r);
  [[nodiscard]] int  rejected() const;
};

struct GeneratedBatch {
  std::vector<Molecule>                                 molecules;
  std::vector<std::pair<std::size_t, QuantizeResult>>   rejections;  //!< sample index, result
  RejectionStats                                        stats;
};

//! One sample per entry of `sizes`; sample k uses a seed derived from (seed, k).
GeneratedBatch generateMolecules(const ScoreModel& model, const NoiseSchedule& schedule, std::span<const int> sizes,
                                 const Controller* controller, double lambda, uint64_t seed);

// ---------------------------------------------------------------------------
// Metrics

//! Degree histogram (0..4+, fractions), element histogram (fractions), ring count.
Eigen::VectorXd graphStatistics(const Molecule& mol);

//! Median of pairwise distances over the pooled statistic vectors (1 if that median is 0).
double medianBandwidth(std::span<const Molecule> a, std::span<const Molecule> b);

/**
 * Unbiased squared MMD with an RBF kernel exp(-|x - y|^2 / (2 s^2)) over graph statistics,
 * clamped at 0. Singleton sets use k(x, x) = 1 for their within term. Throws EmptySet.
 */
double mmdMetric(std::span<const Molecule> a, std::span<const Molecule> b, std::optional<double> bandwidth = std::nullopt);

enum class SuccessPolicy { MaxOfBefore, MeanOfBefore };

struct OptimizeOutcome {
  bool   success         = false;
  double improvementRate = 0.0;  //!< (mean after - mean before) / |mean before|
  double meanBefore      = 0.0;
  double meanAfter       = 0.0;
};

//! success = some after score exceeds the threshold of the policy. Throws EmptySet.
OptimizeOutcome optimizeSuccess(std::span<const double> before, std::span<const double> after,
                                SuccessPolicy policy = SuccessPolicy::MaxOfBefore);
OptimizeOutcome optimizeSuccess(std::span<const Molecule> before, std::span<const Molecule> after, const Controller& scorer,
                                const NoiseSchedule& schedule, SuccessPolicy policy = SuccessPolicy::MaxOfBefore);

// ---------------------------------------------------------------------------
// Persistence

//! "VSSCORE1" / "VSCTRL01" magic, uint32 version, config JSON, uint8 trained, then named float32 tensors.
//! A non-empty `meta` (JSON object text) is stored under the config's "meta" key.
void       saveScoreModel(const std::string& path, const ScoreModel& model, std::string_view meta = {});
ScoreModel loadScoreModel(const std::string& path);
void       saveController(const std::string& path, const Controller& controller, std::string_view meta = {});
Controller loadController(const std::string& path);

}  // namespace vscreen

#endif  // VSCREEN_DIFFUSION_HPP
