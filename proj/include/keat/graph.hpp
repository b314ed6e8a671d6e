#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "keat/error.hpp"

namespace keat {

/// Too little variation in the data for a statistic to be meaningful.
class DegenerateDataError : public DomainError {
 public:
  using DomainError::DomainError;
};

using NodeId = std::size_t;

struct TemporalEvent {
  NodeId src = 0;
  NodeId dst = 0;
  double time = 0.0;
  std::vector<double> edge_feat;
};

/// Immutable, time-ordered event stream with a per-node incidence index.
///
/// Events are stably sorted by time, so simultaneous events keep their input
/// order. An event (i, j) is history for both i and j.
class TemporalGraph {
 public:
  TemporalGraph() = default;
  /// `num_nodes` of 0 means 1 + the largest id seen. Throws DomainError on
  /// negative/non-finite times, wrong feature length, or ids >= num_nodes.
  TemporalGraph(std::vector<TemporalEvent> events, std::size_t d_e, std::size_t num_nodes = 0);

  [[nodiscard]] auto events() const -> const std::vector<TemporalEvent>& { return events_; }
  [[nodiscard]] auto event(std::size_t i) const -> const TemporalEvent& { return events_[i]; }
  [[nodiscard]] auto size() const -> std::size_t { return events_.size(); }
  [[nodiscard]] auto empty() const -> bool { return events_.empty(); }
  [[nodiscard]] auto num_nodes() const -> std::size_t { return num_nodes_; }
  [[nodiscard]] auto d_e() const -> std::size_t { return d_e_; }

  /// Indices of events touching `node`, ascending in time. Self-loops appear once.
  [[nodiscard]] auto incident(NodeId node) const -> std::span<const std::size_t>;
  /// Sorted distinct destination ids.
  [[nodiscard]] auto destinations() const -> const std::vector<NodeId>& { return destinations_; }
  /// Events [begin, end) as a graph over the same node set.
  [[nodiscard]] auto slice(std::size_t begin, std::size_t end) const -> TemporalGraph;

 private:
  std::vector<TemporalEvent> events_;
  std::size_t num_nodes_ = 0;
  std::size_t d_e_ = 0;
  std::vector<std::size_t> offsets_;
  std::vector<std::size_t> incidence_;
  std::vector<NodeId> destinations_;
};

/// Reads `src,dst,time,f_0,...,f_{d_e-1}` rows; a non-numeric first line is
/// taken as a header. Throws ParseError (with line) or DomainError.
[[nodiscard]] auto load_csv(const std::filesystem::path& path, std::size_t d_e) -> TemporalGraph;
void write_csv(const TemporalGraph& g, const std::filesystem::path& path);

struct ChronoSplit {
  TemporalGraph train;
  TemporalGraph val;
  TemporalGraph test;
};

/// Contiguous split: floor(n·train_frac) events, then floor(n·val_frac), rest to test.
[[nodiscard]] auto chrono_split(const TemporalGraph& g, double train_frac, double val_frac)
    -> ChronoSplit;

struct Neighbor {
  NodeId node = 0;
  std::vector<double> edge_feat;
  double time = 0.0;
};

struct NeighborBatch {
  NodeId center = 0;
  double query_time = 0.0;
  std::vector<Neighbor> neighbors;  // most recent first
  std::vector<double> delta_ts;     // query_time - neighbor time, all >= 0

  [[nodiscard]] auto size() const -> std::size_t { return neighbors.size(); }
  [[nodiscard]] auto empty() const -> bool { return neighbors.empty(); }
};

/// Up to `k` most recent events touching `node` strictly before `query_time`.
[[nodiscard]] auto recent_neighbors(const TemporalGraph& g, NodeId node, double query_time,
                                    std::size_t k) -> NeighborBatch;

/// Population standard deviation of consecutive gaps in the global stream.
/// Throws DomainError with fewer than two gaps, DegenerateDataError if all gaps match.
[[nodiscard]] auto train_sigma(const TemporalGraph& train) -> double;

/// Consecutive gaps between the events touching `node`.
[[nodiscard]] auto node_gaps(const TemporalGraph& g, NodeId node) -> std::vector<double>;

struct Histogram {
  std::vector<double> edges;  // bins + 1 edges over [0, max gap]
  std::vector<std::size_t> counts;
  [[nodiscard]] auto empty() const -> bool { return counts.empty(); }
};

/// Per-node gaps pooled over the graph, binned into `bins` equal-width bins
/// over [0, max gap]. Bins are right-closed, the first one also holds 0.
/// Returns an empty histogram when no node has two events.
[[nodiscard]] auto interarrival_histogram(const TemporalGraph& g, std::size_t bins) -> Histogram;

/// Shannon entropy (nats) of the normalized DFT magnitude spectrum of a
/// series, over frequencies 1..floor((n-1)/2). A series with no energy
/// outside the zero frequency has entropy 0.
[[nodiscard]] auto spectral_entropy_of_series(std::span<const double> series) -> double;
/// spectral_entropy_of_series over the node's inter-arrival gaps; needs >= 4 events.
[[nodiscard]] auto spectral_entropy(const TemporalGraph& g, NodeId node) -> double;

}  // namespace keat
