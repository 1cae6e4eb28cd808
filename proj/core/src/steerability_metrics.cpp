#include "pilot/steerability_metrics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <thread>

#include "pilot/diversity_metrics.hpp"
#include "pilot/error.hpp"
#include "pilot/provider_gateway.hpp"
#include "rng.hpp"
#include "text_util.hpp"

namespace pilot {
namespace {

[[noreturn]] void fail(const std::string& message) { throw Error(ErrorKind::invalid_input, message); }

double sum_squares(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

// Exact squared distance between a sparse row and a dense vector.
double exact_squared_distance(const SparseVector& row, std::span<const double> dense) {
  double s = 0.0;
  std::size_t p = 0;
  for (std::size_t d = 0; d < dense.size(); ++d) {
    double x = 0.0;
    if (p < row.indices.size() && row.indices[p] == d) x = row.values[p++];
    const double diff = x - dense[d];
    s += diff * diff;
  }
  return s;
}

int cluster_count(std::span<const int> assignments) {
  if (assignments.empty()) fail("empty assignment list");
  int k = 0;
  for (int a : assignments) {
    if (a < 0) fail("negative cluster index");
    k = std::max(k, a + 1);
  }
  return k;
}

std::uint64_t restart_seed(std::uint64_t master, int k, int restart) {
  return detail::splitmix64(master ^ detail::splitmix64(static_cast<std::uint64_t>(k) * 1000003ULL +
                                                        static_cast<std::uint64_t>(restart)));
}

}  // namespace

double SparseVector::squared_norm() const noexcept {
  double s = 0.0;
  for (double v : values) s += v * v;
  return s;
}

TfIdfModel tfidf_fit(std::span<const std::string> texts, std::span<const std::string> doc_ids) {
  if (texts.size() < 2) fail("tfidf needs at least 2 texts");
  if (!doc_ids.empty() && doc_ids.size() != texts.size()) fail("doc id count mismatch");

  std::vector<std::map<std::string, double>> counts(texts.size());
  std::map<std::string, std::size_t> df;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    TokenStream ts;
    try {
      ts = tokenize(texts[i]);
    } catch (const Error&) {
      fail("untokenizable text at position " + std::to_string(i));
    }
    for (auto& tok : ts.tokens) counts[i][tok] += 1.0;
    for (const auto& [tok, _] : counts[i]) ++df[tok];
  }

  TfIdfModel model;
  std::map<std::string, std::uint32_t> index;
  const double n = static_cast<double>(texts.size());
  for (const auto& [tok, d] : df) {
    index.emplace(tok, static_cast<std::uint32_t>(model.vocabulary.size()));
    model.vocabulary.push_back(tok);
    model.idf.push_back(std::log((1.0 + n) / (1.0 + static_cast<double>(d))) + 1.0);
  }

  model.vectors.reserve(texts.size());
  for (std::size_t i = 0; i < texts.size(); ++i) {
    DocVector doc;
    doc.doc_id = doc_ids.empty() ? std::to_string(i) : doc_ids[i];
    // std::map iteration keeps indices sorted.
    for (const auto& [tok, c] : counts[i]) {
      const std::uint32_t idx = index.at(tok);
      doc.values.indices.push_back(idx);
      doc.values.values.push_back(c * model.idf[idx]);
    }
    const double norm = std::sqrt(doc.values.squared_norm());
    for (double& v : doc.values.values) v /= norm;
    doc.norm = std::sqrt(doc.values.squared_norm());
    model.vectors.push_back(std::move(doc));
  }
  return model;
}

std::vector<DocVector> tfidf_vectors(std::span<const std::string> texts, std::span<const std::string> doc_ids) {
  return tfidf_fit(texts, doc_ids).vectors;
}

PointSet PointSet::from_dense(const std::vector<std::vector<double>>& rows) {
  PointSet ps;
  if (rows.empty()) fail("empty point set");
  ps.dim_ = rows.front().size();
  for (const auto& r : rows) {
    if (r.size() != ps.dim_) fail("inconsistent point dimensions");
    SparseVector sv;
    for (std::size_t d = 0; d < r.size(); ++d) {
      if (!std::isfinite(r[d])) fail("non-finite coordinate");
      if (r[d] != 0.0) {
        sv.indices.push_back(static_cast<std::uint32_t>(d));
        sv.values.push_back(r[d]);
      }
    }
    ps.sq_norms_.push_back(sv.squared_norm());
    ps.rows_.push_back(std::move(sv));
  }
  return ps;
}

PointSet PointSet::from_docs(std::span<const DocVector> docs) {
  PointSet ps;
  if (docs.empty()) fail("empty point set");
  for (const auto& doc : docs) {
    const auto& sv = doc.values;
    if (sv.indices.size() != sv.values.size()) fail("malformed sparse vector");
    for (std::size_t p = 0; p < sv.indices.size(); ++p) {
      if (p > 0 && sv.indices[p] <= sv.indices[p - 1]) fail("sparse indices not increasing");
      if (!std::isfinite(sv.values[p])) fail("non-finite coordinate");
    }
    if (!sv.indices.empty()) ps.dim_ = std::max<std::size_t>(ps.dim_, sv.indices.back() + 1);
    ps.sq_norms_.push_back(sv.squared_norm());
    ps.rows_.push_back(sv);
  }
  ps.dim_ = std::max<std::size_t>(ps.dim_, 1);
  return ps;
}

double PointSet::distance(std::size_t i, std::size_t j) const {
  const auto& a = rows_[i];
  const auto& b = rows_[j];
  double s = 0.0;
  std::size_t p = 0, q = 0;
  while (p < a.indices.size() || q < b.indices.size()) {
    double diff;
    if (q == b.indices.size() || (p < a.indices.size() && a.indices[p] < b.indices[q])) {
      diff = a.values[p++];
    } else if (p == a.indices.size() || b.indices[q] < a.indices[p]) {
      diff = b.values[q++];
    } else {
      diff = a.values[p++] - b.values[q++];
    }
    s += diff * diff;
  }
  return std::sqrt(s);
}

double PointSet::squared_distance_to(std::size_t i, std::span<const double> centroid, double centroid_sq_norm) const {
  // ||c||^2 + sum over the row's nonzeros of (x^2 - 2xc); clamped against rounding.
  const auto& r = rows_[i];
  double s = centroid_sq_norm;
  for (std::size_t p = 0; p < r.indices.size(); ++p) {
    const double x = r.values[p];
    s += x * (x - 2.0 * centroid[r.indices[p]]);
  }
  return std::max(0.0, s);
}

bool PointSet::all_identical() const {
  for (std::size_t i = 1; i < rows_.size(); ++i) {
    if (rows_[i].indices != rows_[0].indices || rows_[i].values != rows_[0].values) return false;
  }
  return true;
}

std::vector<std::size_t> ClusteringResult::cluster_sizes() const {
  std::vector<std::size_t> sizes(static_cast<std::size_t>(k), 0);
  for (int a : assignments) ++sizes[static_cast<std::size_t>(a)];
  return sizes;
}

ClusteringResult kmeans(const PointSet& points, int k, std::uint64_t seed) {
  const std::size_t n = points.size();
  if (k < 2 || static_cast<std::size_t>(k) > n) {
    fail("k out of range: " + std::to_string(k) + " (points: " + std::to_string(n) + ")");
  }
  const std::size_t kk = static_cast<std::size_t>(k);
  const std::size_t dim = points.dim();
  detail::Rng rng(seed);

  auto dense_of = [&](std::size_t i) {
    std::vector<double> c(dim, 0.0);
    const auto& r = points.row(i);
    for (std::size_t p = 0; p < r.indices.size(); ++p) c[r.indices[p]] = r.values[p];
    return c;
  };

  // k-means++ seeding.
  std::vector<std::vector<double>> centroids;
  std::vector<double> csq;
  std::vector<bool> chosen(n, false);
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  std::size_t first = rng.below(n);
  centroids.push_back(dense_of(first));
  csq.push_back(points.squared_norm(first));
  chosen[first] = true;
  while (centroids.size() < kk) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], points.squared_distance_to(i, centroids.back(), csq.back()));
      if (chosen[i]) d2[i] = 0.0;
      total += d2[i];
    }
    std::size_t pick = n;
    if (total > 0.0) {
      const double target = rng.unit() * total;
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (d2[i] <= 0.0) continue;
        acc += d2[i];
        pick = i;
        if (acc > target) break;
      }
    } else {
      // Every remaining point coincides with a centre; take an unused one.
      std::size_t skip = rng.below(n - centroids.size());
      for (std::size_t i = 0; i < n; ++i) {
        if (chosen[i]) continue;
        if (skip-- == 0) {
          pick = i;
          break;
        }
      }
    }
    chosen[pick] = true;
    centroids.push_back(dense_of(pick));
    csq.push_back(points.squared_norm(pick));
  }

  ClusteringResult result;
  result.k = k;
  result.seed = seed;
  std::vector<int> assign(n, -1);
  std::vector<double> cost(n, 0.0);

  for (int iter = 1; iter <= kMaxLloydIterations; ++iter) {
    std::vector<int> next(n);
    for (std::size_t i = 0; i < n; ++i) {
      int best = 0;
      double best_d = points.squared_distance_to(i, centroids[0], csq[0]);
      for (std::size_t c = 1; c < kk; ++c) {
        const double d = points.squared_distance_to(i, centroids[c], csq[c]);
        if (d < best_d) {
          best_d = d;
          best = static_cast<int>(c);
        }
      }
      next[i] = best;
      cost[i] = best_d;
    }

    // Empty-cluster repair: move the point farthest from its centroid,
    // drawn from clusters that can spare a member.
    std::vector<std::size_t> sizes(kk, 0);
    for (int a : next) ++sizes[static_cast<std::size_t>(a)];
    for (std::size_t c = 0; c < kk; ++c) {
      if (sizes[c] > 0) continue;
      std::size_t far = n;
      for (std::size_t i = 0; i < n; ++i) {
        if (sizes[static_cast<std::size_t>(next[i])] < 2) continue;
        if (far == n || cost[i] > cost[far]) far = i;
      }
      --sizes[static_cast<std::size_t>(next[far])];
      next[far] = static_cast<int>(c);
      cost[far] = 0.0;
      sizes[c] = 1;
    }

    const bool stable = next == assign;
    assign = std::move(next);

    for (auto& c : centroids) std::fill(c.begin(), c.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      auto& c = centroids[static_cast<std::size_t>(assign[i])];
      const auto& r = points.row(i);
      for (std::size_t p = 0; p < r.indices.size(); ++p) c[r.indices[p]] += r.values[p];
    }
    for (std::size_t c = 0; c < kk; ++c) {
      const double inv = static_cast<double>(sizes[c]);
      for (double& x : centroids[c]) x /= inv;
      csq[c] = sum_squares(centroids[c]);
    }

    double inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      inertia += exact_squared_distance(points.row(i), centroids[static_cast<std::size_t>(assign[i])]);
    }
    result.inertia_trace.push_back(inertia);
    result.iterations = iter;
    if (stable) break;
  }

  result.assignments = std::move(assign);
  result.centroids = std::move(centroids);
  result.inertia = result.inertia_trace.back();
  return result;
}

double silhouette_score(const PointSet& points, std::span<const int> assignments) {
  const std::size_t n = points.size();
  if (assignments.size() != n) fail("assignment count mismatch");
  const int k = cluster_count(assignments);
  if (k < 2) fail("silhouette needs at least 2 clusters");
  const std::size_t kk = static_cast<std::size_t>(k);
  std::vector<std::size_t> sizes(kk, 0);
  for (int a : assignments) ++sizes[static_cast<std::size_t>(a)];
  if (std::find(sizes.begin(), sizes.end(), 0u) != sizes.end()) fail("empty cluster");

  // sums[i * k + c] = total distance from point i to members of cluster c.
  std::vector<double> sums(n * kk, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = points.distance(i, j);
      sums[i * kk + static_cast<std::size_t>(assignments[j])] += d;
      sums[j * kk + static_cast<std::size_t>(assignments[i])] += d;
    }
  }

  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t own = static_cast<std::size_t>(assignments[i]);
    if (sizes[own] < 2) continue;
    const double a = sums[i * kk + own] / static_cast<double>(sizes[own] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < kk; ++c) {
      if (c != own) b = std::min(b, sums[i * kk + c] / static_cast<double>(sizes[c]));
    }
    const double m = std::max(a, b);
    if (m > 0.0) total += (b - a) / m;
  }
  return total / static_cast<double>(n);
}

double cluster_purity(std::span<const int> assignments, std::span<const std::string> labels) {
  if (labels.size() != assignments.size()) fail("missing label");
  const int k = cluster_count(assignments);
  std::vector<std::map<std::string_view, std::size_t>> counts(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    ++counts[static_cast<std::size_t>(assignments[i])][labels[i]];
  }
  std::size_t majority = 0;
  for (const auto& m : counts) {
    std::size_t best = 0;
    for (const auto& [_, c] : m) best = std::max(best, c);
    majority += best;
  }
  return static_cast<double>(majority) / static_cast<double>(assignments.size());
}

double within_cluster_deviation(const PointSet& points, const ClusteringResult& result) {
  if (result.assignments.size() != points.size()) fail("assignment count mismatch");
  const auto sizes = result.cluster_sizes();
  std::vector<double> sums(sizes.size(), 0.0);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto c = static_cast<std::size_t>(result.assignments[i]);
    sums[c] += std::sqrt(exact_squared_distance(points.row(i), result.centroids[c]));
  }
  double total = 0.0;
  for (std::size_t c = 0; c < sizes.size(); ++c) {
    if (sizes[c] == 0) fail("empty cluster");
    if (sizes[c] > 1) total += sums[c] / static_cast<double>(sizes[c]);
  }
  return total / static_cast<double>(sizes.size());
}

SweepResult optimal_k_sweep(const PointSet& points, int k_min, int k_max, std::uint64_t seed, std::size_t threads) {
  const int n = static_cast<int>(points.size());
  if (k_min < 2 || k_min > k_max || k_max > n) {
    fail("invalid k range [" + std::to_string(k_min) + ", " + std::to_string(k_max) +
         "] for " + std::to_string(n) + " points");
  }
  const std::size_t count = static_cast<std::size_t>(k_max - k_min + 1);
  std::vector<ClusteringResult> best(count);
  std::vector<double> silhouettes(count, 0.0);

  auto run_k = [&](std::size_t slot) {
    const int k = k_min + static_cast<int>(slot);
    ClusteringResult keep;
    for (int r = 0; r < kSweepRestarts; ++r) {
      ClusteringResult run = kmeans(points, k, restart_seed(seed, k, r));
      if (r == 0 || run.inertia < keep.inertia) keep = std::move(run);
    }
    silhouettes[slot] = silhouette_score(points, keep.assignments);
    best[slot] = std::move(keep);
  };

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, count);
  if (threads <= 1) {
    for (std::size_t s = 0; s < count; ++s) run_k(s);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mu;
    {
      std::vector<std::jthread> pool;
      for (std::size_t t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
          for (std::size_t s = next++; s < count; s = next++) {
            try {
              run_k(s);
            } catch (...) {
              std::lock_guard lock(failure_mu);
              if (!failure) failure = std::current_exception();
            }
          }
        });
      }
    }
    if (failure) std::rethrow_exception(failure);
  }

  SweepResult out;
  std::size_t pick = 0;
  for (std::size_t s = 0; s < count; ++s) {
    const int k = k_min + static_cast<int>(s);
    out.silhouette_by_k.emplace_back(k, silhouettes[s]);
    out.inertia_by_k.emplace_back(k, best[s].inertia);
    if (silhouettes[s] > silhouettes[pick]) pick = s;
  }
  out.best_k = k_min + static_cast<int>(pick);
  out.best = std::move(best[pick]);
  return out;
}

std::string_view to_string(VectorSource source) noexcept {
  return source == VectorSource::tfidf ? "tfidf" : "embedding";
}

int min_steerability_group(const SteerabilityConfig& config) noexcept { return std::max(4, config.k_min); }

SteerabilityReport steerability_summary(std::span<const ResponseRecord> group, const SteerabilityConfig& config) {
  const std::size_t n = group.size();
  if (n < static_cast<std::size_t>(min_steerability_group(config))) fail("group too small");

  std::vector<std::string> texts, ids, content_labels, persona_labels;
  for (const auto& r : group) {
    texts.push_back(r.response_text);
    ids.push_back(r.id);
    content_labels.push_back(r.request_id);
    persona_labels.push_back(r.base_persona);
  }

  SteerabilityReport report;
  report.n_docs = n;
  report.source = config.source;

  PointSet points;
  if (config.source == VectorSource::tfidf) {
    const auto docs = tfidf_vectors(texts, ids);
    points = PointSet::from_docs(docs);
  } else {
    if (config.gateway == nullptr) fail("embedding source needs a provider gateway");
    auto vectors = config.gateway->embed(texts, config.embed_model);
    std::vector<std::vector<double>> rows;
    rows.reserve(vectors.size());
    for (auto& v : vectors) {
      const double norm = std::sqrt(sum_squares(v.values));
      if (norm == 0.0) throw Error(ErrorKind::provider, "zero embedding vector");
      for (double& x : v.values) x /= norm;
      rows.push_back(std::move(v.values));
    }
    points = PointSet::from_dense(rows);
  }

  const int ni = static_cast<int>(n);
  int k_max = config.k_max.value_or(std::min(ni - 1, (ni + 1) / 2));
  k_max = std::min(k_max, ni);
  const int k_min = config.k_min;
  if (k_max < k_min) fail("group too small");
  report.k_range = {k_min, k_max};

  if (points.all_identical()) {
    report.degenerate = true;
    return report;
  }

  SweepResult sweep = optimal_k_sweep(points, k_min, k_max, config.seed, config.threads);
  report.silhouette_by_k = sweep.silhouette_by_k;
  report.optimal_k = sweep.best_k;
  report.silhouette = sweep.silhouette_by_k[static_cast<std::size_t>(sweep.best_k - k_min)].second;
  report.content_purity = cluster_purity(sweep.best.assignments, content_labels);
  report.persona_purity = cluster_purity(sweep.best.assignments, persona_labels);
  report.avg_cluster_size = static_cast<double>(n) / static_cast<double>(sweep.best_k);
  report.within_cluster_deviation = within_cluster_deviation(points, sweep.best);
  return report;
}

}  // namespace pilot
