#include "explore/rewards.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace explore::rewards {

using nlohmann::json;

double novelty_update_and_reward(NoveltyState& state, Vec2 pos_m) {
  int& n = state.counts[cell_key(state.grid_cell(pos_m))];
  ++n;
  return state.scale / std::sqrt(static_cast<double>(n));
}

double area_coverage_reward(CoverageState& state, double newly_seen_area_m2) {
  if (newly_seen_area_m2 < 0.0) {
    throw std::invalid_argument("newly seen area must be non-negative");
  }
  state.area_m2 += newly_seen_area_m2;
  return state.area_scale * newly_seen_area_m2;
}

double smooth_coverage_reward(CoverageState& state,
                              std::span<const CellCoord> seen_now) {
  if (seen_now.empty()) return 0.0;
  double acc = 0.0;
  for (const auto& c : seen_now) {
    int& n = state.region_counts[cell_key(c)];
    ++n;
    acc += 1.0 / std::sqrt(static_cast<double>(n));
  }
  return state.scale * acc / static_cast<double>(seen_now.size());
}

CuriosityModel::CuriosityModel(int feature_dim, int action_count,
                               double learning_rate, double scale)
    : dim_(feature_dim), actions_(action_count), alpha_(learning_rate), scale_(scale) {
  if (feature_dim <= 0 || action_count <= 0) {
    throw std::invalid_argument("curiosity model dimensions must be positive");
  }
  w_.assign(actions_, std::vector<double>(static_cast<size_t>(dim_) * dim_, 0.0));
  b_.assign(actions_, std::vector<double>(dim_, 0.0));
}

std::vector<double> CuriosityModel::predict(std::span<const double> phi,
                                            int action) const {
  if (static_cast<int>(phi.size()) != dim_) {
    throw std::invalid_argument("feature dimension mismatch");
  }
  if (action < 0 || action >= actions_) {
    throw std::invalid_argument("action index out of range");
  }
  std::vector<double> out(b_[action]);
  const auto& w = w_[action];
  // Features are sparse one-hots in practice; skip zero columns.
  for (int j = 0; j < dim_; ++j) {
    const double pj = phi[j];
    if (pj == 0.0) continue;
    for (int i = 0; i < dim_; ++i) {
      out[i] += w[static_cast<size_t>(i) * dim_ + j] * pj;
    }
  }
  return out;
}

double CuriosityModel::reward_and_update(std::span<const double> phi_t,
                                         int action,
                                         std::span<const double> phi_next) {
  auto pred = predict(phi_t, action);
  std::vector<double> err(dim_);
  double sq = 0.0;
  for (int i = 0; i < dim_; ++i) {
    err[i] = pred[i] - phi_next[i];
    sq += err[i] * err[i];
  }
  // One SGD step on ||W phi + b - y||^2 after the reward is taken.
  auto& w = w_[action];
  auto& b = b_[action];
  for (int j = 0; j < dim_; ++j) {
    const double pj = phi_t[j];
    if (pj == 0.0) continue;
    const double step = 2.0 * alpha_ * pj;
    for (int i = 0; i < dim_; ++i) {
      w[static_cast<size_t>(i) * dim_ + j] -= step * err[i];
    }
  }
  for (int i = 0; i < dim_; ++i) b[i] -= 2.0 * alpha_ * err[i];
  return scale_ * sq;
}

std::vector<double> one_hot_patch_feature(std::span<const uint8_t> states,
                                          int heading, int heading_count) {
  std::vector<double> phi(states.size() * 3 + heading_count, 0.0);
  for (size_t i = 0; i < states.size(); ++i) {
    phi[i * 3 + std::min<uint8_t>(states[i], 2)] = 1.0;
  }
  phi[states.size() * 3 + (heading % heading_count)] = 1.0;
  return phi;
}

namespace {

double sq_dist(std::span<const double> a, std::span<const double> b) {
  double d = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double t = a[i] - b[i];
    d += t * t;
  }
  return d;
}

}  // namespace

ConceptSpace discover_concepts(const std::vector<std::vector<double>>& samples,
                               int k, int max_iters, uint64_t seed,
                               std::vector<double>* inertia_trace) {
  if (samples.empty()) throw std::invalid_argument("no samples to cluster");
  if (k <= 0) throw std::invalid_argument("k must be positive");
  if (static_cast<size_t>(k) > samples.size())
    throw std::invalid_argument("k exceeds sample count");
  const int dim = static_cast<int>(samples[0].size());
  for (const auto& s : samples) {
    if (static_cast<int>(s.size()) != dim) {
      throw std::invalid_argument("inconsistent sample dimensions");
    }
  }
  const int kk = k;
  Rng rng(mix_key(seed, hash_string("kmeans")));

  // k-means++ seeding.
  std::vector<std::vector<double>> centroids;
  centroids.push_back(samples[rng.index(samples.size())]);
  std::vector<double> d2(samples.size());
  while (static_cast<int>(centroids.size()) < kk) {
    double total = 0.0;
    for (size_t i = 0; i < samples.size(); ++i) {
      double best = sq_dist(samples[i], centroids[0]);
      for (size_t c = 1; c < centroids.size(); ++c) {
        best = std::min(best, sq_dist(samples[i], centroids[c]));
      }
      d2[i] = best;
      total += best;
    }
    if (total <= 0.0) {
      centroids.push_back(samples[rng.index(samples.size())]);
      continue;
    }
    double pick = rng.uniform() * total;
    size_t chosen = samples.size() - 1;
    for (size_t i = 0; i < samples.size(); ++i) {
      pick -= d2[i];
      if (pick <= 0.0) {
        chosen = i;
        break;
      }
    }
    centroids.push_back(samples[chosen]);
  }

  // Lloyd iterations.
  std::vector<int> assign(samples.size(), -1);
  for (int iter = 0; iter < max_iters; ++iter) {
    bool changed = false;
    for (size_t i = 0; i < samples.size(); ++i) {
      int best = 0;
      double bd = sq_dist(samples[i], centroids[0]);
      for (int c = 1; c < kk; ++c) {
        const double d = sq_dist(samples[i], centroids[c]);
        if (d < bd) {
          bd = d;
          best = c;
        }
      }
      if (assign[i] != best) {
        assign[i] = best;
        changed = true;
      }
    }
    if (!changed && iter > 0) break;
    std::vector<std::vector<double>> sums(kk, std::vector<double>(dim, 0.0));
    std::vector<int> counts(kk, 0);
    for (size_t i = 0; i < samples.size(); ++i) {
      ++counts[assign[i]];
      for (int j = 0; j < dim; ++j) sums[assign[i]][j] += samples[i][j];
    }
    for (int c = 0; c < kk; ++c) {
      if (counts[c] == 0) continue;  // empty cluster keeps its centroid
      for (int j = 0; j < dim; ++j) centroids[c][j] = sums[c][j] / counts[c];
    }
    if (inertia_trace) {
      double inertia = 0.0;
      for (const auto& s : samples) {
        double best = sq_dist(s, centroids[0]);
        for (int c = 1; c < kk; ++c) best = std::min(best, sq_dist(s, centroids[c]));
        inertia += best;
      }
      inertia_trace->push_back(inertia);
    }
  }

  ConceptSpace space;
  space.k = kk;
  space.dim = dim;
  space.centroids = std::move(centroids);
  for (size_t i = 0; i < samples.size(); ++i) {
    double best = sq_dist(samples[i], space.centroids[0]);
    for (int c = 1; c < kk; ++c) {
      best = std::min(best, sq_dist(samples[i], space.centroids[c]));
    }
    space.inertia += best;
  }
  return space;
}

int nearest_concept(std::span<const double> sig, const ConceptSpace& space) {
  int best = 0;
  double bd = sq_dist(sig, space.centroids[0]);
  for (int c = 1; c < space.k; ++c) {
    const double d = sq_dist(sig, space.centroids[c]);
    if (d < bd) {
      bd = d;
      best = c;
    }
  }
  return best;
}

std::vector<double> true_concept_distribution(std::span<const double> sig,
                                              const ConceptSpace& space, int j) {
  if (j <= 0 || j > space.k) throw std::invalid_argument("j out of range");
  std::vector<std::pair<double, int>> by_dist;
  by_dist.reserve(space.k);
  for (int c = 0; c < space.k; ++c) {
    by_dist.push_back({sq_dist(sig, space.centroids[c]), c});
  }
  std::sort(by_dist.begin(), by_dist.end());  // distance, then lower index
  std::vector<double> dist(space.k, 0.0);
  for (int i = 0; i < j; ++i) dist[by_dist[i].second] = 1.0 / j;
  return dist;
}

double kl_divergence(std::span<const double> p, std::span<const double> q,
                     double eps) {
  if (p.size() != q.size() || p.empty()) {
    throw std::invalid_argument("distributions must match and be non-empty");
  }
  const double ps = std::accumulate(p.begin(), p.end(), 0.0);
  const double qs = std::accumulate(q.begin(), q.end(), 0.0);
  if (std::abs(ps - 1.0) > 1e-9 || std::abs(qs - 1.0) > 1e-9) {
    throw std::invalid_argument("distributions must sum to 1");
  }
  // Floor q at eps and renormalize; keeps exact values when q has no zeros.
  double qnorm = 0.0;
  for (double v : q) qnorm += std::max(v, eps);
  double kl = 0.0;
  for (size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    kl += p[i] * std::log(p[i] / (std::max(q[i], eps) / qnorm));
  }
  return kl;
}

double reconstruction_loss(const ReconstructionTask& task,
                           const std::vector<std::vector<double>>& predictions) {
  if (predictions.size() != task.true_dists.size()) {
    throw std::invalid_argument("prediction count mismatch");
  }
  if (predictions.empty()) return 0.0;
  double acc = 0.0;
  for (size_t i = 0; i < predictions.size(); ++i) {
    acc += kl_divergence(task.true_dists[i], predictions[i]);
  }
  return acc / static_cast<double>(predictions.size());
}

double reconstruction_reward(ReconstructionTask& task,
                             const std::vector<std::vector<double>>& predictions,
                             int t) {
  if (task.period <= 0) throw std::invalid_argument("period must be positive");
  if (t % task.period != 0) return 0.0;
  task.query_losses.resize(predictions.size());
  for (size_t i = 0; i < predictions.size(); ++i) {
    task.query_losses[i] = kl_divergence(task.true_dists[i], predictions[i]);
  }
  const double loss = reconstruction_loss(task, predictions);
  double reward = 0.0;
  if (task.has_last) reward = task.scale * (task.last_loss - loss);
  task.last_loss = loss;
  task.has_last = true;
  return reward;
}

std::string serialize_concepts(const ConceptSpace& space) {
  json j;
  j["format"] = "explorebench-concepts";
  j["version"] = 1;
  j["k"] = space.k;
  j["dim"] = space.dim;
  j["inertia"] = space.inertia;
  j["centroids"] = space.centroids;
  return j.dump();
}

ConceptSpace deserialize_concepts(const std::string& text) {
  json j = json::parse(text);
  if (j.value("format", "") != "explorebench-concepts" || j.value("version", 0) != 1) {
    throw std::runtime_error("not a concepts table");
  }
  ConceptSpace space;
  space.k = j.at("k").get<int>();
  space.dim = j.at("dim").get<int>();
  space.inertia = j.at("inertia").get<double>();
  space.centroids = j.at("centroids").get<std::vector<std::vector<double>>>();
  return space;
}

void save_concepts(const ConceptSpace& space, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << serialize_concepts(space);
}

ConceptSpace load_concepts(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return deserialize_concepts(ss.str());
}

}  // namespace explore::rewards
