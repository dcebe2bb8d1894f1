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

#include "vscreen/domain.hpp"

#include <algorithm>
#include <cstdint>
#include <limits>
#include <thread>

#include "vscreen/errors.hpp"

namespace vscreen {

DomainSample fingerprintDomain(std::string id, std::span<const Molecule> mols, int radius, int width) {
  DomainSample d{std::move(id), Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(mols.size()), width)};
  for (std::size_t i = 0; i < mols.size(); ++i) {
    for (int bit : morganFingerprint(mols[i], radius, width).onBits()) d.points(static_cast<Eigen::Index>(i), bit) = 1.0;
  }
  return d;
}

namespace {

void checkSample(const DomainSample& s) {
  if (s.points.rows() == 0) throw Error(ErrorCode::InvalidArgument, "domain '" + s.id + "' is empty");
  if (s.points.rows() > kMaxDomainSize) {
    throw Error(ErrorCode::TooLarge, "domain '" + s.id + "' has " + std::to_string(s.points.rows()) + " points; exact solver limit is " +
                                         std::to_string(kMaxDomainSize));
  }
  if (!s.points.allFinite()) throw Error(ErrorCode::InvalidArgument, "domain '" + s.id + "' has non-finite coordinates");
}

// Successive shortest paths with Johnson potentials on a dense bipartite network.
class TransportSolver {
 public:
  TransportSolver(const Eigen::MatrixXd& cost, int64_t rowSupply, int64_t colDemand)
      : n_(static_cast<int>(cost.rows())), m_(static_cast<int>(cost.cols())) {
    const int v = n_ + m_ + 2;
    graph_.resize(static_cast<std::size_t>(v));
    const int64_t inf = rowSupply * n_;
    for (int i = 0; i < n_; ++i) addEdge(source(), row(i), rowSupply, 0.0);
    rowColEdge_.assign(static_cast<std::size_t>(n_) * static_cast<std::size_t>(m_), 0);
    for (int i = 0; i < n_; ++i) {
      for (int j = 0; j < m_; ++j) {
        rowColEdge_[static_cast<std::size_t>(i) * static_cast<std::size_t>(m_) + static_cast<std::size_t>(j)] =
            addEdge(row(i), col(j), inf, cost(i, j));
      }
    }
    for (int j = 0; j < m_; ++j) addEdge(col(j), sink(), colDemand, 0.0);
    total_ = rowSupply * n_;
  }

  Eigen::MatrixXd solve() {
    const std::size_t v = graph_.size();
    std::vector<double> potential(v, 0.0);
    std::vector<double> dist(v);
    std::vector<int>    prevNode(v);
    std::vector<int>    prevEdge(v);
    std::vector<char>   done(v);
    const double        inf  = std::numeric_limits<double>::infinity();
    int64_t             sent = 0;
    while (sent < total_) {
      std::fill(dist.begin(), dist.end(), inf);
      std::fill(done.begin(), done.end(), 0);
      dist[static_cast<std::size_t>(source())] = 0.0;
      for (;;) {
        int u = -1;
        for (std::size_t x = 0; x < v; ++x) {
          if (!done[x] && dist[x] < inf && (u < 0 || dist[x] < dist[static_cast<std::size_t>(u)])) u = static_cast<int>(x);
        }
        if (u < 0) break;
        done[static_cast<std::size_t>(u)] = 1;
        const auto& edges = graph_[static_cast<std::size_t>(u)];
        for (std::size_t e = 0; e < edges.size(); ++e) {
          const Edge& ed = edges[e];
          if (ed.cap <= 0 || done[static_cast<std::size_t>(ed.to)]) continue;
          const double reduced = std::max(0.0, ed.cost + potential[static_cast<std::size_t>(u)] - potential[static_cast<std::size_t>(ed.to)]);
          const double nd      = dist[static_cast<std::size_t>(u)] + reduced;
          if (nd < dist[static_cast<std::size_t>(ed.to)]) {
            dist[static_cast<std::size_t>(ed.to)]     = nd;
            prevNode[static_cast<std::size_t>(ed.to)] = u;
            prevEdge[static_cast<std::size_t>(ed.to)] = static_cast<int>(e);
          }
        }
      }
      const double reach = dist[static_cast<std::size_t>(sink())];
      if (reach == inf) throw Error(ErrorCode::InvalidArgument, "transport network disconnected");
      for (std::size_t x = 0; x < v; ++x) potential[x] += std::min(dist[x], reach);

      int64_t push = total_ - sent;
      for (int x = sink(); x != source(); x = prevNode[static_cast<std::size_t>(x)]) {
        const Edge& ed = graph_[static_cast<std::size_t>(prevNode[static_cast<std::size_t>(x)])][static_cast<std::size_t>(prevEdge[static_cast<std::size_t>(x)])];
        push           = std::min(push, ed.cap);
      }
      for (int x = sink(); x != source(); x = prevNode[static_cast<std::size_t>(x)]) {
        Edge& ed = graph_[static_cast<std::size_t>(prevNode[static_cast<std::size_t>(x)])][static_cast<std::size_t>(prevEdge[static_cast<std::size_t>(x)])];
        ed.cap -= push;
        graph_[static_cast<std::size_t>(ed.to)][static_cast<std::size_t>(ed.rev)].cap += push;
      }
      sent += push;
    }

    Eigen::MatrixXd flow(n_, m_);
    for (int i = 0; i < n_; ++i) {
      for (int j = 0; j < m_; ++j) {
        const Edge& fwd = graph_[static_cast<std::size_t>(row(i))][static_cast<std::size_t>(
            rowColEdge_[static_cast<std::size_t>(i) * static_cast<std::size_t>(m_) + static_cast<std::size_t>(j)])];
        flow(i, j) = static_cast<double>(graph_[static_cast<std::size_t>(fwd.to)][static_cast<std::size_t>(fwd.rev)].cap);
      }
    }
    return flow;
  }

 private:
  struct Edge {
    int     to;
    int     rev;
    int64_t cap;
    double  cost;
  };

  [[nodiscard]] int source() const { return 0; }
  [[nodiscard]] int row(int i) const { return 1 + i; }
  [[nodiscard]] int col(int j) const { return 1 + n_ + j; }
  [[nodiscard]] int sink() const { return 1 + n_ + m_; }

  int addEdge(int from, int to, int64_t cap, double cost) {
    auto& f = graph_[static_cast<std::size_t>(from)];
    auto& t = graph_[static_cast<std::size_t>(to)];
    f.push_back({to, static_cast<int>(t.size()), cap, cost});
    t.push_back({from, static_cast<int>(f.size()) - 1, 0, -cost});
    return static_cast<int>(f.size()) - 1;
  }

  int                            n_;
  int                            m_;
  std::vector<std::vector<Edge>> graph_;
  std::vector<int>               rowColEdge_;
  int64_t                        total_ = 0;
};

}  // namespace

WassersteinResult wassersteinCoupling(const DomainSample& a, const DomainSample& b) {
  checkSample(a);
  checkSample(b);
  if (a.points.cols() != b.points.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "descriptor dimensions differ: " + std::to_string(a.points.cols()) + " vs " +
                                                  std::to_string(b.points.cols()));
  }
  const Eigen::Index n = a.points.rows();
  const Eigen::Index m = b.points.rows();
  Eigen::MatrixXd    cost(n, m);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) cost(i, j) = (a.points.row(i) - b.points.row(j)).norm();
  }
  TransportSolver   solver(cost, m, n);
  const auto        flow = solver.solve();
  const double      mass = static_cast<double>(n) * static_cast<double>(m);
  WassersteinResult out;
  out.plan = flow / mass;
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      if (flow(i, j) > 0.0) total += flow(i, j) * cost(i, j);
    }
  }
  out.distance = total / mass;
  return out;
}

double wassersteinDistance(const DomainSample& a, const DomainSample& b) { return wassersteinCoupling(a, b).distance; }

std::vector<RankedSource> selectSources(const DomainSample& target, std::span<const DomainSample> sources, int k, int threads) {
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "k must be at least 1");
  std::vector<double> dist(sources.size());
  const auto          work = [&](std::size_t begin, std::size_t step) {
    for (std::size_t i = begin; i < sources.size(); i += step) dist[i] = wassersteinDistance(target, sources[i]);
  };
  const auto nthreads = static_cast<std::size_t>(std::clamp(threads, 1, 64));
  if (nthreads == 1 || sources.size() < 2) {
    work(0, 1);
  } else {
    std::vector<std::exception_ptr> errors(nthreads);
    std::vector<std::thread>        pool;
    for (std::size_t t = 0; t < nthreads; ++t) {
      pool.emplace_back([&, t] {
        try {
          work(t, nthreads);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  std::vector<std::size_t> order(sources.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return dist[x] < dist[y]; });
  order.resize(std::min(order.size(), static_cast<std::size_t>(k)));
  std::vector<RankedSource> out;
  for (std::size_t i : order) out.push_back({sources[i].id, dist[i]});
  return out;
}

}  // namespace vscreen
