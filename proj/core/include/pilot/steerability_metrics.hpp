#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pilot/corpus_store.hpp"

namespace pilot {

class Gateway;

/// Sorted (index, value) pairs; zeros are not stored.
struct SparseVector {
  std::vector<std::uint32_t> indices;
  std::vector<double> values;

  double squared_norm() const noexcept;
};

struct DocVector {
  std::string doc_id;
  SparseVector values;
  double norm = 0.0;  // Euclidean norm; 1 for vectorizer output
};

struct TfIdfModel {
  std::vector<std::string> vocabulary;  // lexicographic; index = feature id
  std::vector<double> idf;
  std::vector<DocVector> vectors;
};

/// Raw-count term frequency times idf = ln((1 + N) / (1 + df)) + 1, each
/// vector L2-normalized. Needs at least two texts, each with a token.
/// `doc_ids` defaults to the text positions.
TfIdfModel tfidf_fit(std::span<const std::string> texts, std::span<const std::string> doc_ids = {});
std::vector<DocVector> tfidf_vectors(std::span<const std::string> texts, std::span<const std::string> doc_ids = {});

/// Points in a real vector space, stored sparsely.
class PointSet {
 public:
  static PointSet from_dense(const std::vector<std::vector<double>>& rows);
  static PointSet from_docs(std::span<const DocVector> docs);

  std::size_t size() const noexcept { return rows_.size(); }
  std::size_t dim() const noexcept { return dim_; }
  const SparseVector& row(std::size_t i) const { return rows_[i]; }
  double squared_norm(std::size_t i) const { return sq_norms_[i]; }

  /// Euclidean distance, computed from coordinate differences.
  double distance(std::size_t i, std::size_t j) const;
  double squared_distance_to(std::size_t i, std::span<const double> centroid, double centroid_sq_norm) const;
  bool all_identical() const;

 private:
  std::size_t dim_ = 0;
  std::vector<SparseVector> rows_;
  std::vector<double> sq_norms_;
};

struct ClusteringResult {
  int k = 0;
  std::vector<int> assignments;               // point index -> cluster in [0, k)
  std::vector<std::vector<double>> centroids;  // dense, k x dim
  double inertia = 0.0;
  std::uint64_t seed = 0;
  int iterations = 0;
  std::vector<double> inertia_trace;  // inertia after each Lloyd iteration

  std::vector<std::size_t> cluster_sizes() const;
};

inline constexpr int kMaxLloydIterations = 300;
inline constexpr int kSweepRestarts = 5;

/// Lloyd's algorithm from k-means++ seeding. Stops when assignments stop
/// changing or after 300 iterations. An empty cluster takes the point
/// farthest from its centroid. Deterministic for fixed inputs and seed.
ClusteringResult kmeans(const PointSet& points, int k, std::uint64_t seed);

/// Mean silhouette (Euclidean). Singleton members and points with
/// max(a, b) = 0 score 0. Needs k >= 2 and every cluster in [0, k)
/// non-empty, where k = max assignment + 1.
double silhouette_score(const PointSet& points, std::span<const int> assignments);

/// (1/N) * sum over clusters of the largest label count in the cluster.
double cluster_purity(std::span<const int> assignments, std::span<const std::string> labels);

/// Mean over clusters of the mean member distance to the centroid.
double within_cluster_deviation(const PointSet& points, const ClusteringResult& result);

struct SweepResult {
  int best_k = 0;
  ClusteringResult best;
  std::vector<std::pair<int, double>> silhouette_by_k;
  std::vector<std::pair<int, double>> inertia_by_k;
};

/// For each k in [k_min, k_max], keeps the lowest-inertia of five seeded
/// restarts, then picks the k with the highest silhouette (ties go to the
/// smaller k). `threads` = 0 uses the hardware concurrency.
SweepResult optimal_k_sweep(const PointSet& points, int k_min, int k_max, std::uint64_t seed,
                            std::size_t threads = 0);

enum class VectorSource { tfidf, embedding };

std::string_view to_string(VectorSource source) noexcept;

struct SteerabilityConfig {
  int k_min = 2;
  std::optional<int> k_max;  // default min(N - 1, ceil(N / 2))
  std::uint64_t seed = 0;
  VectorSource source = VectorSource::tfidf;
  const Gateway* gateway = nullptr;  // required for VectorSource::embedding
  std::string embed_model;
  std::size_t threads = 0;
};

/// Clustering-based steerability statistics for one response group. When
/// every document vector is identical the report is flagged degenerate and
/// carries no clustering statistics.
struct SteerabilityReport {
  std::size_t n_docs = 0;
  VectorSource source = VectorSource::tfidf;
  bool degenerate = false;
  std::optional<double> silhouette;
  std::optional<double> content_purity;  // labels: request_id
  std::optional<double> persona_purity;  // labels: base_persona
  std::optional<int> optimal_k;
  std::optional<double> avg_cluster_size;  // n_docs / optimal_k
  std::optional<double> within_cluster_deviation;
  std::pair<int, int> k_range{0, 0};
  std::vector<std::pair<int, double>> silhouette_by_k;
};

/// Minimum group size for steerability_summary.
int min_steerability_group(const SteerabilityConfig& config) noexcept;

/// Throws Error(invalid_input) "group too small" below min_steerability_group.
SteerabilityReport steerability_summary(std::span<const ResponseRecord> group, const SteerabilityConfig& config);

}  // namespace pilot
