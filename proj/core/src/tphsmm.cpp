// Copyright 2026 The fskill authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "fskill/tphsmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace fskill {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kLogTwoPi = 1.8378770664093454836;
constexpr double kEmptyMass = 1e-8;
constexpr double kMinDurationStddev = 0.5;

// Streaming log-sum-exp accumulator.
struct LogSum {
  double peak = kNegInf;
  double sum = 0.0;

  void add(double x) {
    if (x == kNegInf) {
      return;
    }
    if (x <= peak) {
      sum += std::exp(x - peak);
    } else {
      sum = sum * std::exp(peak - x) + 1.0;
      peak = x;
    }
  }
  double value() const {
    return sum > 0.0 ? peak + std::log(sum) : kNegInf;
  }
};

Vec safe_log(const Vec& v) {
  Vec out(v.size());
  for (int i = 0; i < v.size(); ++i) {
    out(i) = v(i) > 0.0 ? std::log(v(i)) : kNegInf;
  }
  return out;
}

Mat safe_log(const Mat& m) {
  Mat out(m.rows(), m.cols());
  for (int i = 0; i < m.rows(); ++i) {
    for (int j = 0; j < m.cols(); ++j) {
      out(i, j) = m(i, j) > 0.0 ? std::log(m(i, j)) : kNegInf;
    }
  }
  return out;
}

/// Weighted Karcher mean by iterated tangent-space averaging. Exact in one
/// step for Euclidean geometries.
Vec karcher_mean(const Geometry& geom, const std::vector<const Vec*>& pts,
                 const std::vector<double>& weights, double total,
                 const Vec& init) {
  Vec e = geom.project(init);
  const int d = geom.tangent_dim();
  for (int it = 0; it < 100; ++it) {
    Vec delta = Vec::Zero(d);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (weights[i] > 0.0) {
        delta += weights[i] * geom.log(*pts[i], e);
      }
    }
    delta /= total;
    e = geom.exp(delta, e);
    if (delta.norm() < 1e-12) {
      break;
    }
  }
  return e;
}

// Expected sufficient statistics of one demo under the current model.
struct DemoStats {
  double loglik = kNegInf;
  Mat gamma;       // T x K smoothed occupancy
  Mat trans;       // K x K expected transition counts
  Vec init;        // K expected initial occupancy
  Vec dur_w0, dur_w1, dur_w2;  // K duration weight moments
};

/// Explicit-duration forward-backward in the log domain. `logb` holds the
/// per-sample emission log-densities, `logdur[k][d-1]` the duration terms
/// up to the truncated support.
DemoStats hsmm_forward_backward(const Vec& logpi, const Mat& logA,
                                const std::vector<std::vector<double>>& logdur,
                                const Mat& logb) {
  const int T = static_cast<int>(logb.rows());
  const int K = static_cast<int>(logb.cols());

  // Prefix sums of emissions: window(k, t0..t1) in O(1).
  Mat cum = Mat::Zero(T + 1, K);
  for (int t = 0; t < T; ++t) {
    cum.row(t + 1) = cum.row(t) + logb.row(t);
  }
  auto window = [&](int k, int t0, int t1) {
    return cum(t1 + 1, k) - cum(t0, k);
  };

  Mat alpha = Mat::Constant(T, K, kNegInf);
  // in(t, k): log-mass of entering component k right after a segment that
  // ended at sample t.
  Mat entry = Mat::Constant(T, K, kNegInf);
  for (int t = 0; t < T; ++t) {
    for (int k = 0; k < K; ++k) {
      const int dmax = std::min<int>(static_cast<int>(logdur[k].size()), t + 1);
      LogSum acc;
      for (int d = 1; d <= dmax; ++d) {
        const int start = t - d + 1;
        const double prev = (start == 0) ? logpi(k) : entry(start - 1, k);
        if (prev == kNegInf) {
          continue;
        }
        acc.add(prev + logdur[k][d - 1] + window(k, start, t));
      }
      alpha(t, k) = acc.value();
    }
    if (t + 1 < T) {
      for (int k = 0; k < K; ++k) {
        LogSum acc;
        for (int h = 0; h < K; ++h) {
          if (alpha(t, h) != kNegInf && logA(h, k) != kNegInf) {
            acc.add(alpha(t, h) + logA(h, k));
          }
        }
        entry(t, k) = acc.value();
      }
    }
  }

  DemoStats stats;
  {
    LogSum acc;
    for (int k = 0; k < K; ++k) {
      acc.add(alpha(T - 1, k));
    }
    stats.loglik = acc.value();
  }
  if (stats.loglik == kNegInf) {
    throw NumericError("HSMM inference: data has zero likelihood under the "
                       "current model");
  }

  // beta(t, k): log-probability of the future given a k-segment ends at t.
  // star(t, k): same but for a k-segment STARTING at t+1.
  Mat beta = Mat::Constant(T, K, kNegInf);
  Mat star = Mat::Constant(T, K, kNegInf);
  beta.row(T - 1).setZero();
  for (int t = T - 2; t >= 0; --t) {
    for (int k = 0; k < K; ++k) {
      const int dmax =
          std::min<int>(static_cast<int>(logdur[k].size()), T - 1 - t);
      LogSum acc;
      for (int d = 1; d <= dmax; ++d) {
        acc.add(logdur[k][d - 1] + window(k, t + 1, t + d) + beta(t + d, k));
      }
      star(t, k) = acc.value();
    }
    for (int k = 0; k < K; ++k) {
      LogSum acc;
      for (int j = 0; j < K; ++j) {
        if (logA(k, j) != kNegInf && star(t, j) != kNegInf) {
          acc.add(logA(k, j) + star(t, j));
        }
      }
      beta(t, k) = acc.value();
    }
  }

  // Segment posteriors, accumulated with a difference array per component.
  stats.gamma = Mat::Zero(T, K);
  stats.trans = Mat::Zero(K, K);
  stats.init = Vec::Zero(K);
  stats.dur_w0 = Vec::Zero(K);
  stats.dur_w1 = Vec::Zero(K);
  stats.dur_w2 = Vec::Zero(K);
  Mat diff = Mat::Zero(T + 1, K);
  for (int t = 0; t < T; ++t) {
    for (int k = 0; k < K; ++k) {
      if (beta(t, k) == kNegInf) {
        continue;
      }
      const int dmax = std::min<int>(static_cast<int>(logdur[k].size()), t + 1);
      for (int d = 1; d <= dmax; ++d) {
        const int start = t - d + 1;
        const double prev = (start == 0) ? logpi(k) : entry(start - 1, k);
        if (prev == kNegInf) {
          continue;
        }
        const double logchi = prev + logdur[k][d - 1] + window(k, start, t) +
                              beta(t, k) - stats.loglik;
        if (logchi < -700.0) {
          continue;
        }
        const double chi = std::exp(logchi);
        diff(start, k) += chi;
        diff(t + 1, k) -= chi;
        stats.dur_w0(k) += chi;
        stats.dur_w1(k) += chi * d;
        stats.dur_w2(k) += chi * static_cast<double>(d) * d;
        if (start == 0) {
          stats.init(k) += chi;
        }
      }
    }
  }
  for (int k = 0; k < K; ++k) {
    double run = 0.0;
    for (int t = 0; t < T; ++t) {
      run += diff(t, k);
      stats.gamma(t, k) = std::max(run, 0.0);
    }
  }
  // Rows are 1 up to float drift; renormalize so downstream weights are a
  // clean partition of unity.
  for (int t = 0; t < T; ++t) {
    const double s = stats.gamma.row(t).sum();
    if (s > 0.0) {
      stats.gamma.row(t) /= s;
    }
  }

  for (int t = 0; t + 1 < T; ++t) {
    for (int h = 0; h < K; ++h) {
      if (alpha(t, h) == kNegInf) {
        continue;
      }
      for (int k = 0; k < K; ++k) {
        if (logA(h, k) == kNegInf || star(t, k) == kNegInf) {
          continue;
        }
        const double v = alpha(t, h) + logA(h, k) + star(t, k) - stats.loglik;
        if (v > -700.0) {
          stats.trans(h, k) += std::exp(v);
        }
      }
    }
  }
  return stats;
}

std::vector<std::vector<double>> duration_tables(const Tphsmm& model,
                                                 double span, int horizon) {
  std::vector<std::vector<double>> out(model.components());
  for (int k = 0; k < model.components(); ++k) {
    const int dmax = duration_support(model.durations[k], span, horizon);
    out[k].resize(dmax);
    for (int d = 1; d <= dmax; ++d) {
      out[k][d - 1] = duration_logprob(model.durations[k], d);
    }
  }
  return out;
}

void validate_demos(int P, const std::vector<LocalViews>& demos) {
  if (demos.empty()) {
    throw Error("no demonstrations given");
  }
  for (const LocalViews& demo : demos) {
    if (static_cast<int>(demo.size()) != P) {
      throw Error("demo has " + std::to_string(demo.size()) +
                  " frame views, model expects " + std::to_string(P));
    }
    const std::size_t T = demo.front().size();
    if (T == 0) {
      throw Error("demo with zero samples");
    }
    for (const PointSeq& seq : demo) {
      if (seq.size() != T) {
        throw Error("frame views of one demo differ in length");
      }
    }
  }
}

struct LabeledData {
  // label[m][t] in [0, K)
  std::vector<std::vector<int>> labels;
};

LabeledData time_slice_labels(const std::vector<LocalViews>& demos, int K) {
  LabeledData out;
  for (const LocalViews& demo : demos) {
    const int T = static_cast<int>(demo.front().size());
    std::vector<int> lab(T);
    for (int k = 0; k < K; ++k) {
      const int lo = static_cast<int>((static_cast<long long>(T) * k) / K);
      const int hi = static_cast<int>((static_cast<long long>(T) * (k + 1)) / K);
      for (int t = lo; t < hi; ++t) {
        lab[t] = k;
      }
    }
    out.labels.push_back(std::move(lab));
  }
  return out;
}

LabeledData kmeans_labels(const Geometry& geom,
                          const std::vector<LocalViews>& demos, int K,
                          std::uint64_t seed) {
  const int P = static_cast<int>(demos.front().size());
  const int D = geom.tangent_dim();

  // Per-frame Karcher mean of all samples; features are stacked tangent
  // coordinates at those means.
  std::vector<Vec> frame_means(P);
  for (int p = 0; p < P; ++p) {
    std::vector<const Vec*> pts;
    for (const LocalViews& demo : demos) {
      for (const Vec& x : demo[p]) {
        pts.push_back(&x);
      }
    }
    const std::vector<double> w(pts.size(), 1.0);
    frame_means[p] = karcher_mean(geom, pts, w,
                                  static_cast<double>(pts.size()), *pts[0]);
  }

  std::vector<Vec> feats;
  std::vector<double> time_frac;
  for (const LocalViews& demo : demos) {
    const int T = static_cast<int>(demo.front().size());
    for (int t = 0; t < T; ++t) {
      Vec f(P * D);
      for (int p = 0; p < P; ++p) {
        f.segment(p * D, D) = geom.log(demo[p][t], frame_means[p]);
      }
      feats.push_back(std::move(f));
      time_frac.push_back(T > 1 ? static_cast<double>(t) / (T - 1) : 0.0);
    }
  }
  const int N = static_cast<int>(feats.size());

  // kmeans++ seeding.
  std::mt19937_64 rng(seed);
  std::vector<Vec> centers;
  std::uniform_int_distribution<int> pick(0, N - 1);
  centers.push_back(feats[pick(rng)]);
  std::vector<double> d2(N);
  while (static_cast<int>(centers.size()) < K) {
    double total = 0.0;
    for (int i = 0; i < N; ++i) {
      double best = std::numeric_limits<double>::max();
      for (const Vec& c : centers) {
        best = std::min(best, (feats[i] - c).squaredNorm());
      }
      d2[i] = best;
      total += best;
    }
    double r = std::uniform_real_distribution<double>(0.0, total)(rng);
    int chosen = N - 1;
    for (int i = 0; i < N; ++i) {
      r -= d2[i];
      if (r <= 0.0) {
        chosen = i;
        break;
      }
    }
    centers.push_back(feats[chosen]);
  }

  std::vector<int> label(N, 0);
  for (int iter = 0; iter < 100; ++iter) {
    bool changed = false;
    for (int i = 0; i < N; ++i) {
      int best = 0;
      double bestd = (feats[i] - centers[0]).squaredNorm();
      for (int k = 1; k < K; ++k) {
        const double d = (feats[i] - centers[k]).squaredNorm();
        if (d < bestd - 1e-15) {
          bestd = d;
          best = k;
        }
      }
      if (best != label[i]) {
        label[i] = best;
        changed = true;
      }
    }
    for (int k = 0; k < K; ++k) {
      Vec mean = Vec::Zero(P * D);
      int count = 0;
      for (int i = 0; i < N; ++i) {
        if (label[i] == k) {
          mean += feats[i];
          ++count;
        }
      }
      if (count > 0) {
        centers[k] = mean / count;
      } else {
        // Re-seed an empty cluster at the point farthest from its center.
        int far = 0;
        double fard = -1.0;
        for (int i = 0; i < N; ++i) {
          const double d = (feats[i] - centers[label[i]]).squaredNorm();
          if (d > fard) {
            fard = d;
            far = i;
          }
        }
        centers[k] = feats[far];
        label[far] = k;
        changed = true;
      }
    }
    if (!changed) {
      break;
    }
  }

  // Order components by mean time fraction so left-to-right makes sense.
  std::vector<double> mean_time(K, 0.0);
  std::vector<int> count(K, 0);
  for (int i = 0; i < N; ++i) {
    mean_time[label[i]] += time_frac[i];
    ++count[label[i]];
  }
  std::vector<int> order(K);
  for (int k = 0; k < K; ++k) {
    order[k] = k;
    if (count[k] > 0) {
      mean_time[k] /= count[k];
    }
  }
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return mean_time[a] < mean_time[b];
  });
  std::vector<int> rank(K);
  for (int k = 0; k < K; ++k) {
    rank[order[k]] = k;
  }

  LabeledData out;
  int idx = 0;
  for (const LocalViews& demo : demos) {
    const int T = static_cast<int>(demo.front().size());
    std::vector<int> lab(T);
    for (int t = 0; t < T; ++t) {
      lab[t] = rank[label[idx++]];
    }
    out.labels.push_back(std::move(lab));
  }
  return out;
}

}  // namespace

void Tphsmm::check_invariants(double covariance_floor) const {
  if (!geometry) {
    throw Error("model has no geometry");
  }
  const int K = components();
  const int P = frames();
  if (K < 1 || P < 1) {
    throw Error("model needs at least one component and one frame");
  }
  if (std::abs(priors.sum() - 1.0) > 1e-9 || priors.minCoeff() < -1e-12) {
    throw Error("priors must be a probability vector");
  }
  if (transitions.rows() != K || transitions.cols() != K) {
    throw Error("transition matrix must be K x K");
  }
  for (int h = 0; h < K; ++h) {
    if (std::abs(transitions(h, h)) > 0.0) {
      throw Error("transition diagonal must be zero (durations own dwell)");
    }
    const double row = transitions.row(h).sum();
    // Absorbing rows (the last component of a left-to-right chain, or the
    // single component when K = 1) sum to 0, every other row to 1.
    if (std::abs(row - 1.0) > 1e-9 && std::abs(row) > 1e-9) {
      throw Error("transition row " + std::to_string(h) +
                  " must sum to 1 (or 0 if absorbing)");
    }
    if (transitions.row(h).minCoeff() < -1e-12) {
      throw Error("negative transition probability");
    }
  }
  if (static_cast<int>(durations.size()) != K) {
    throw Error("need one duration model per component");
  }
  for (const DurationModel& d : durations) {
    if (d.stddev < kMinDurationStddev - 1e-12) {
      throw Error("duration stddev below 0.5 samples");
    }
    if (!(d.mean > 0.0)) {
      throw Error("duration mean must be positive");
    }
  }
  if (static_cast<int>(locals.size()) != P) {
    throw Error("need one Gaussian list per frame");
  }
  for (const auto& per_frame : locals) {
    if (static_cast<int>(per_frame.size()) != K) {
      throw Error("every frame must carry the same K components");
    }
    for (const Gaussian& g : per_frame) {
      check_gaussian(*geometry, g, covariance_floor);
    }
  }
}

double duration_logprob(const DurationModel& dm, double d) {
  const double z = (d - dm.mean) / dm.stddev;
  return -0.5 * kLogTwoPi - std::log(dm.stddev) - 0.5 * z * z;
}

double duration_logprob(const Tphsmm& model, int k, double d) {
  if (k < 0 || k >= model.components()) {
    throw Error("duration_logprob: component out of range");
  }
  return duration_logprob(model.durations[k], d);
}

int duration_support(const DurationModel& dm, double span, int horizon) {
  const int dmax = static_cast<int>(std::ceil(dm.mean + span * dm.stddev));
  return std::clamp(dmax, 1, std::max(1, horizon));
}

Tphsmm init_model(GeometryPtr geometry,
                  const std::vector<std::string>& frame_names,
                  const std::vector<LocalViews>& demos,
                  const TphsmmConfig& config) {
  if (!geometry) {
    throw Error("init_model: no geometry");
  }
  const int K = config.components;
  if (K < 1) {
    throw Error("init_model: need K >= 1");
  }
  if (frame_names.empty()) {
    throw Error("init_model: need at least one frame");
  }
  Tphsmm model;
  model.geometry = geometry;
  model.frame_names = frame_names;
  validate_demos(static_cast<int>(frame_names.size()), demos);

  long long total = 0;
  for (const LocalViews& demo : demos) {
    total += static_cast<long long>(demo.front().size());
  }
  if (total < K) {
    throw Error("init_model: K = " + std::to_string(K) +
                " exceeds the total sample count " + std::to_string(total));
  }

  LabeledData labeled;
  if (config.init_strategy == "time-slice") {
    labeled = time_slice_labels(demos, K);
  } else if (config.init_strategy == "kmeans") {
    labeled = kmeans_labels(*geometry, demos, K, config.seed);
  } else {
    throw Error("unknown init strategy '" + config.init_strategy +
                "' (expected time-slice or kmeans)");
  }

  const int P = static_cast<int>(frame_names.size());
  const int D = geometry->tangent_dim();
  const double floor_eig = config.covariance_floor;

  model.locals.assign(P, std::vector<Gaussian>(K));
  for (int p = 0; p < P; ++p) {
    for (int k = 0; k < K; ++k) {
      std::vector<const Vec*> pts;
      for (std::size_t m = 0; m < demos.size(); ++m) {
        for (std::size_t t = 0; t < demos[m][p].size(); ++t) {
          if (labeled.labels[m][t] == k) {
            pts.push_back(&demos[m][p][t]);
          }
        }
      }
      if (pts.empty()) {
        throw Error("init_model: component " + std::to_string(k) +
                    " received no samples; reduce K");
      }
      const std::vector<double> w(pts.size(), 1.0);
      const Vec mean = karcher_mean(*geometry, pts, w,
                                    static_cast<double>(pts.size()), *pts[0]);
      Mat cov = Mat::Zero(D, D);
      for (const Vec* x : pts) {
        const Vec v = geometry->log(*x, mean);
        cov += v * v.transpose();
      }
      cov /= static_cast<double>(pts.size());
      cov += floor_eig * Mat::Identity(D, D);
      model.locals[p][k] = Gaussian{mean, cov};
    }
  }

  // Durations from per-demo label runs (time-slice: the slice lengths).
  model.durations.assign(K, DurationModel{});
  for (int k = 0; k < K; ++k) {
    std::vector<double> lengths;
    for (const auto& lab : labeled.labels) {
      double run = 0.0;
      for (std::size_t t = 0; t < lab.size(); ++t) {
        if (lab[t] == k) {
          run += 1.0;
        }
        const bool closing = (t + 1 == lab.size()) || (lab[t + 1] != k);
        if (run > 0.0 && lab[t] == k && closing) {
          lengths.push_back(run);
          run = 0.0;
        }
      }
    }
    double mean = 1.0;
    double stddev = kMinDurationStddev;
    if (!lengths.empty()) {
      double s = 0.0;
      for (double v : lengths) {
        s += v;
      }
      mean = std::max(1.0, s / static_cast<double>(lengths.size()));
      double var = 0.0;
      for (double v : lengths) {
        var += (v - mean) * (v - mean);
      }
      var /= static_cast<double>(lengths.size());
      stddev = std::max(kMinDurationStddev, std::sqrt(var));
    }
    model.durations[k] = DurationModel{mean, stddev};
  }

  model.priors = Vec::Zero(K);
  model.transitions = Mat::Zero(K, K);
  if (config.topology == "left-to-right") {
    model.priors(0) = 1.0;
    for (int k = 0; k + 1 < K; ++k) {
      model.transitions(k, k + 1) = 1.0;
    }
  } else if (config.topology == "ergodic") {
    model.priors.setConstant(1.0 / K);
    if (K > 1) {
      model.transitions.setConstant(1.0 / (K - 1));
      model.transitions.diagonal().setZero();
    }
  } else {
    throw Error("unknown topology '" + config.topology +
                "' (expected left-to-right or ergodic)");
  }

  model.check_invariants(0.0);
  return model;
}

EmResult em_fit(const Tphsmm& model, const std::vector<LocalViews>& demos,
                const TphsmmConfig& config) {
  model.check_invariants(0.0);
  validate_demos(model.frames(), demos);

  const Geometry& geom = *model.geometry;
  const int K = model.components();
  const int P = model.frames();
  const int D = geom.tangent_dim();
  const int M = static_cast<int>(demos.size());

  EmResult out;
  Tphsmm cur = model;
  std::vector<bool> warned(K, false);
  double prev_ll = kNegInf;
  const int max_iter = std::max(1, config.max_iterations);

  for (int iter = 0; iter < max_iter; ++iter) {
    const Vec logpi = safe_log(cur.priors);
    const Mat logA = safe_log(cur.transitions);

    std::vector<std::vector<GaussianEvaluator>> evals(P);
    for (int p = 0; p < P; ++p) {
      evals[p].reserve(K);
      for (int k = 0; k < K; ++k) {
        evals[p].emplace_back(geom, cur.locals[p][k]);
      }
    }

    double total_ll = 0.0;
    std::vector<Mat> gammas(M);
    Mat trans_acc = Mat::Zero(K, K);
    Vec init_acc = Vec::Zero(K);
    Vec w0 = Vec::Zero(K), w1 = Vec::Zero(K), w2 = Vec::Zero(K);

    for (int m = 0; m < M; ++m) {
      const int T = static_cast<int>(demos[m].front().size());
      Mat logb(T, K);
      for (int t = 0; t < T; ++t) {
        for (int k = 0; k < K; ++k) {
          double v = 0.0;
          for (int p = 0; p < P; ++p) {
            v += evals[p][k].logpdf(demos[m][p][t]);
          }
          logb(t, k) = v;
        }
      }
      DemoStats stats = hsmm_forward_backward(
          logpi, logA, duration_tables(cur, config.duration_sigma_span, T),
          logb);
      total_ll += stats.loglik;
      gammas[m] = std::move(stats.gamma);
      trans_acc += stats.trans;
      init_acc += stats.init;
      w0 += stats.dur_w0;
      w1 += stats.dur_w1;
      w2 += stats.dur_w2;
    }

    out.loglik_trace.push_back(total_ll);
    out.responsibilities = std::move(gammas);

    const bool converged =
        iter > 0 &&
        std::abs(total_ll - prev_ll) <= config.tolerance * (1.0 + std::abs(total_ll));
    prev_ll = total_ll;
    if (converged || iter + 1 == max_iter) {
      break;
    }

    // M step. Priors and transitions from expected counts; rows that saw
    // no mass keep their previous values (structural zeros stay zero).
    if (init_acc.sum() > 1e-12) {
      cur.priors = init_acc / init_acc.sum();
    }
    for (int h = 0; h < K; ++h) {
      const double row = trans_acc.row(h).sum();
      if (row > 1e-12) {
        cur.transitions.row(h) = trans_acc.row(h) / row;
        cur.transitions(h, h) = 0.0;
      }
    }
    for (int k = 0; k < K; ++k) {
      if (w0(k) > kEmptyMass) {
        const double mu = w1(k) / w0(k);
        const double var = std::max(0.0, w2(k) / w0(k) - mu * mu);
        cur.durations[k].mean = std::max(1.0, mu);
        cur.durations[k].stddev =
            std::max(kMinDurationStddev, std::sqrt(var));
      }
    }

    for (int k = 0; k < K; ++k) {
      double mass = 0.0;
      for (int m = 0; m < M; ++m) {
        mass += out.responsibilities[m].col(k).sum();
      }
      if (mass < kEmptyMass) {
        if (!warned[k]) {
          out.warnings.push_back("component " + std::to_string(k) +
                                 " has responsibility mass < 1e-8; kept with "
                                 "regularized covariance");
          warned[k] = true;
        }
        for (int p = 0; p < P; ++p) {
          cur.locals[p][k].cov +=
              config.covariance_floor * Mat::Identity(D, D);
        }
        continue;
      }
      for (int p = 0; p < P; ++p) {
        std::vector<const Vec*> pts;
        std::vector<double> weights;
        for (int m = 0; m < M; ++m) {
          const int T = static_cast<int>(demos[m][p].size());
          for (int t = 0; t < T; ++t) {
            const double w = out.responsibilities[m](t, k);
            if (w > 0.0) {
              pts.push_back(&demos[m][p][t]);
              weights.push_back(w);
            }
          }
        }
        const Vec mean = karcher_mean(geom, pts, weights, mass,
                                      cur.locals[p][k].mean);
        Mat cov = Mat::Zero(D, D);
        for (std::size_t i = 0; i < pts.size(); ++i) {
          const Vec v = geom.log(*pts[i], mean);
          cov += weights[i] * (v * v.transpose());
        }
        cov /= mass;
        cov += config.covariance_floor * Mat::Identity(D, D);
        cur.locals[p][k] = Gaussian{mean, 0.5 * (cov + cov.transpose())};
      }
    }

#ifndef NDEBUG
    cur.check_invariants(0.0);
#endif
  }

  out.model = std::move(cur);
  return out;
}

std::vector<Gaussian> global_components(const Tphsmm& model,
                                        const Scene& scene) {
  const Scene ordered = scene.subset(model.frame_names);
  const Geometry& geom = *model.geometry;
  std::vector<Gaussian> out;
  out.reserve(model.components());
  for (int k = 0; k < model.components(); ++k) {
    std::vector<Gaussian> mapped;
    mapped.reserve(model.frames());
    for (int p = 0; p < model.frames(); ++p) {
      mapped.push_back(
          frame_transform(geom, ordered.frames[p].second, model.locals[p][k]));
    }
    out.push_back(gaussian_product(geom, mapped));
  }
  return out;
}

}  // namespace fskill
