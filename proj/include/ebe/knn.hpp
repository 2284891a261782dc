#pragma once

// Exact cosine k-nearest-neighbor retrieval over a NormalizedIndex, the
// example attribution built from it, and mode prediction.

#include <algorithm>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "ebe/embedding.hpp"
#include "ebe/error.hpp"
#include "ebe/index.hpp"
#include "ebe/parallel.hpp"

namespace ebe {

struct Neighbor {
  std::size_t train_index = 0;
  double distance = 0.0;
  std::size_t rank = 0;  // 1-based

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

/// Ranked neighbors: distances non-decreasing, ties by ascending train_index.
using NeighborList = std::vector<Neighbor>;

struct ExecOptions {
  std::size_t threads = 1;       // 0 = hardware concurrency
  std::size_t query_block = 64;  // queries scored together against each row tile
  std::size_t row_tile = 256;    // index rows per tile
};

namespace detail {

struct Candidate {
  double distance;
  std::size_t index;
};

// Strict total order used for ranking: distance first, then train index.
inline bool closer(const Candidate& a, const Candidate& b) noexcept {
  return a.distance < b.distance || (a.distance == b.distance && a.index < b.index);
}

inline double distance_from_similarity(double similarity) noexcept {
  return std::clamp(1.0 - similarity, 0.0, 2.0);
}

// Bounded max-heap (by `closer`) holding the best k candidates seen so far.
// The final content depends only on the candidate set, never on arrival order.
class TopK {
 public:
  explicit TopK(std::size_t k) : k_(k) { heap_.reserve(k); }

  void offer(double distance, std::size_t index) {
    const Candidate c{distance, index};
    if (heap_.size() < k_) {
      heap_.push_back(c);
      std::push_heap(heap_.begin(), heap_.end(), closer);
    } else if (closer(c, heap_.front())) {
      std::pop_heap(heap_.begin(), heap_.end(), closer);
      heap_.back() = c;
      std::push_heap(heap_.begin(), heap_.end(), closer);
    }
  }

  NeighborList finish() {
    std::sort(heap_.begin(), heap_.end(), closer);
    NeighborList out;
    out.reserve(heap_.size());
    for (std::size_t i = 0; i < heap_.size(); ++i) {
      out.push_back({heap_[i].index, heap_[i].distance, i + 1});
    }
    return out;
  }

 private:
  std::size_t k_;
  std::vector<Candidate> heap_;
};

inline void check_k(std::size_t k, const NormalizedIndex& index) {
  if (k == 0 || k > index.rows()) {
    throw ParamError("k=" + std::to_string(k) + " violates 0 < k <= n (n=" +
                     std::to_string(index.rows()) + ")");
  }
}

inline void check_dims(std::size_t dims, const NormalizedIndex& index) {
  if (dims != index.dims()) {
    throw ShapeError("query has " + std::to_string(dims) + " dims, index has " +
                     std::to_string(index.dims()));
  }
}

}  // namespace detail

/// Exact top-k over an already-normalized query (unit length or all zeros).
inline NeighborList top_k_normalized(std::span<const double> unit_query,
                                     const NormalizedIndex& index, std::size_t k) {
  detail::check_dims(unit_query.size(), index);
  detail::check_k(k, index);
  detail::TopK best(k);
  for (std::size_t r = 0; r < index.rows(); ++r) {
    best.offer(detail::distance_from_similarity(kernel::dot<double, double>(unit_query, index.row(r))), r);
  }
  return best.finish();
}

/// The k training rows closest to `query` under cosine distance. Exhaustive.
inline NeighborList top_k(std::span<const float> query, const NormalizedIndex& index,
                          std::size_t k, Metric = Metric::Cosine) {
  detail::check_dims(query.size(), index);
  std::vector<double> unit(query.size());
  kernel::unit<float>(query, unit);
  return top_k_normalized(unit, index, k);
}

/// Neighbor lists for every query in the batch, in batch order. Queries are
/// scored in blocks against tiles of index rows; results do not depend on
/// block sizes or thread count.
inline std::vector<NeighborList> batch_top_k(const QueryBatch& batch, const NormalizedIndex& index,
                                             std::size_t k, const ExecOptions& opts = {}) {
  detail::check_dims(batch.dims(), index);
  detail::check_k(k, index);
  const std::size_t m = batch.size();
  const std::size_t block = std::max<std::size_t>(opts.query_block, 1);
  const std::size_t tile = std::max<std::size_t>(opts.row_tile, 1);
  const std::size_t n_blocks = (m + block - 1) / block;
  std::vector<NeighborList> results(m);

  parallel_for(n_blocks, opts.threads, [&](std::size_t b) {
    const std::size_t q0 = b * block;
    const std::size_t q1 = std::min(m, q0 + block);
    std::vector<detail::TopK> best;
    best.reserve(q1 - q0);
    for (std::size_t q = q0; q < q1; ++q) best.emplace_back(k);
    for (std::size_t r0 = 0; r0 < index.rows(); r0 += tile) {
      const std::size_t r1 = std::min(index.rows(), r0 + tile);
      for (std::size_t q = q0; q < q1; ++q) {
        const auto query = batch.query(q);
        auto& heap = best[q - q0];
        for (std::size_t r = r0; r < r1; ++r) {
          heap.offer(detail::distance_from_similarity(kernel::dot<double, double>(query, index.row(r))), r);
        }
      }
    }
    for (std::size_t q = q0; q < q1; ++q) results[q] = best[q - q0].finish();
  });
  return results;
}

/// Mode of the neighbor labels. Among classes tied on count, the one owning
/// the best-ranked neighbor wins; remaining ties go to the smallest class id.
inline ClassId predict(std::span<const ClassId> neighbor_labels, const NeighborList& neighbors) {
  if (neighbor_labels.empty()) throw ParamError("predict: empty neighbor label set");
  if (neighbor_labels.size() != neighbors.size()) {
    throw ShapeError("predict: " + std::to_string(neighbor_labels.size()) + " labels for " +
                     std::to_string(neighbors.size()) + " neighbors");
  }
  struct Tally {
    std::size_t count = 0;
    std::size_t best_rank = 0;
  };
  std::map<ClassId, Tally> tally;
  for (std::size_t i = 0; i < neighbor_labels.size(); ++i) {
    auto& t = tally[neighbor_labels[i]];
    if (t.count == 0 || neighbors[i].rank < t.best_rank) t.best_rank = neighbors[i].rank;
    ++t.count;
  }
  auto winner = tally.begin();
  for (auto it = std::next(tally.begin()); it != tally.end(); ++it) {
    const auto& a = it->second;
    const auto& w = winner->second;
    // Map iteration is by ascending class id, so strict comparisons keep the
    // smallest id on a full tie.
    if (a.count > w.count || (a.count == w.count && a.best_rank < w.best_rank)) winner = it;
  }
  return winner->first;
}

/// One example attribution: the ranked training examples behind a
/// prediction, each carrying weight 1/k.
struct Attribution {
  std::size_t query_id = 0;
  LayerId layer_id = 0;
  std::size_t k = 0;
  NeighborList neighbors;
  std::vector<ClassId> neighbor_labels;
  std::vector<double> weights;
  ClassId predicted_label = 0;

  friend bool operator==(const Attribution&, const Attribution&) = default;
};

/// Joins a neighbor list with training labels and uniform weights.
inline Attribution make_attribution(std::size_t query_id, NeighborList neighbors,
                                    const NormalizedIndex& index) {
  Attribution a;
  a.query_id = query_id;
  a.layer_id = index.source_layer();
  a.k = neighbors.size();
  a.neighbor_labels.reserve(a.k);
  for (const auto& nb : neighbors) a.neighbor_labels.push_back(index.labels()[nb.train_index]);
  a.weights.assign(a.k, 1.0 / static_cast<double>(a.k));
  a.predicted_label = predict(a.neighbor_labels, neighbors);
  a.neighbors = std::move(neighbors);
  return a;
}

inline Attribution attribute(std::size_t query_id, std::span<const float> query,
                             const NormalizedIndex& index, std::size_t k) {
  return make_attribution(query_id, top_k(query, index, k), index);
}

inline std::vector<Attribution> batch_attribute(const QueryBatch& batch,
                                                const NormalizedIndex& index, std::size_t k,
                                                const ExecOptions& opts = {}) {
  auto lists = batch_top_k(batch, index, k, opts);
  std::vector<Attribution> out;
  out.reserve(lists.size());
  for (std::size_t q = 0; q < lists.size(); ++q) {
    out.push_back(make_attribution(batch.query_ids()[q], std::move(lists[q]), index));
  }
  return out;
}

}  // namespace ebe
