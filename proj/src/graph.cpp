#include "keat/graph.hpp"

#include <fmt/format.h>
#include <fmt/os.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <string>
#include <string_view>

namespace keat {

TemporalGraph::TemporalGraph(std::vector<TemporalEvent> events, std::size_t d_e,
                             std::size_t num_nodes)
    : events_(std::move(events)), d_e_(d_e) {
  std::size_t max_id_plus_one = 0;
  for (const auto& e : events_) {
    if (!std::isfinite(e.time) || e.time < 0.0) {
      throw DomainError(fmt::format("event time {} is negative or non-finite", e.time));
    }
    if (e.edge_feat.size() != d_e_) {
      throw DomainError(fmt::format("edge feature length {} != d_e {}", e.edge_feat.size(), d_e_));
    }
    max_id_plus_one = std::max({max_id_plus_one, e.src + 1, e.dst + 1});
  }
  num_nodes_ = num_nodes == 0 ? max_id_plus_one : num_nodes;
  if (max_id_plus_one > num_nodes_) {
    throw DomainError(fmt::format("node id {} outside declared node count {}", max_id_plus_one - 1,
                                  num_nodes_));
  }
  std::stable_sort(events_.begin(), events_.end(),
                   [](const TemporalEvent& a, const TemporalEvent& b) { return a.time < b.time; });

  // CSR incidence index; iterating events in time order keeps each list sorted.
  offsets_.assign(num_nodes_ + 1, 0);
  for (const auto& e : events_) {
    ++offsets_[e.src + 1];
    if (e.dst != e.src) ++offsets_[e.dst + 1];
  }
  for (std::size_t i = 0; i < num_nodes_; ++i) offsets_[i + 1] += offsets_[i];
  incidence_.resize(offsets_.back());
  std::vector<std::size_t> cursor(offsets_.begin(), offsets_.end() - 1);
  for (std::size_t i = 0; i < events_.size(); ++i) {
    const auto& e = events_[i];
    incidence_[cursor[e.src]++] = i;
    if (e.dst != e.src) incidence_[cursor[e.dst]++] = i;
  }

  for (const auto& e : events_) destinations_.push_back(e.dst);
  std::sort(destinations_.begin(), destinations_.end());
  destinations_.erase(std::unique(destinations_.begin(), destinations_.end()),
                      destinations_.end());
}

auto TemporalGraph::incident(NodeId node) const -> std::span<const std::size_t> {
  if (node >= num_nodes_) return {};
  return std::span<const std::size_t>(incidence_).subspan(offsets_[node],
                                                          offsets_[node + 1] - offsets_[node]);
}

auto TemporalGraph::slice(std::size_t begin, std::size_t end) const -> TemporalGraph {
  end = std::min(end, events_.size());
  begin = std::min(begin, end);
  std::vector<TemporalEvent> part(events_.begin() + static_cast<std::ptrdiff_t>(begin),
                                  events_.begin() + static_cast<std::ptrdiff_t>(end));
  return TemporalGraph(std::move(part), d_e_, num_nodes_);
}

namespace {

auto split_fields(std::string_view line) -> std::vector<std::string_view> {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? comma : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

auto trim(std::string_view s) -> std::string_view {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

template <typename T>
auto parse_number(std::string_view field, T& out) -> bool {
  field = trim(field);
  if (field.empty()) return false;
  if (field.front() == '+') field.remove_prefix(1);
  const auto* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), end, out);
  return ec == std::errc() && ptr == end;
}

}  // namespace

auto load_csv(const std::filesystem::path& path, std::size_t d_e) -> TemporalGraph {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open event file " + path.string());
  std::vector<TemporalEvent> events;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string_view view = trim(line);
    if (view.empty()) continue;
    const auto fields = split_fields(view);
    TemporalEvent ev;
    double src = 0.0;
    if (events.empty() && lineno == 1 && !parse_number(fields[0], src)) continue;  // header
    if (fields.size() != 3 + d_e) {
      throw ParseError(fmt::format("expected {} fields, found {}", 3 + d_e, fields.size()), lineno);
    }
    if (!parse_number(fields[0], ev.src) || !parse_number(fields[1], ev.dst)) {
      throw ParseError("node ids must be non-negative integers", lineno);
    }
    if (!parse_number(fields[2], ev.time)) throw ParseError("malformed time", lineno);
    if (!std::isfinite(ev.time) || ev.time < 0.0) {
      throw DomainError(fmt::format("negative or non-finite time {} (line {})", ev.time, lineno));
    }
    ev.edge_feat.resize(d_e);
    for (std::size_t f = 0; f < d_e; ++f) {
      if (!parse_number(fields[3 + f], ev.edge_feat[f])) {
        throw ParseError(fmt::format("malformed edge feature f_{}", f), lineno);
      }
    }
    events.push_back(std::move(ev));
  }
  return TemporalGraph(std::move(events), d_e);
}

void write_csv(const TemporalGraph& g, const std::filesystem::path& path) {
  std::string out = "src,dst,time";
  for (std::size_t f = 0; f < g.d_e(); ++f) out += fmt::format(",f_{}", f);
  out += '\n';
  for (const auto& e : g.events()) {
    out += fmt::format("{},{},{}", e.src, e.dst, e.time);
    for (double v : e.edge_feat) out += fmt::format(",{}", v);
    out += '\n';
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw std::runtime_error("cannot write " + path.string());
  file << out;
  if (!file) throw std::runtime_error("write failed for " + path.string());
}

auto chrono_split(const TemporalGraph& g, double train_frac, double val_frac) -> ChronoSplit {
  if (!(train_frac > 0.0) || !(val_frac >= 0.0) || train_frac + val_frac > 1.0 + 1e-12) {
    throw DomainError(
        fmt::format("invalid split fractions train={} val={}", train_frac, val_frac));
  }
  const auto n = static_cast<double>(g.size());
  // The epsilon absorbs representation error such as 0.7 * 10 = 7 - ulp.
  const auto n_train = std::min(g.size(), static_cast<std::size_t>(std::floor(n * train_frac + 1e-9)));
  const auto n_val =
      std::min(g.size() - n_train, static_cast<std::size_t>(std::floor(n * val_frac + 1e-9)));
  return ChronoSplit{g.slice(0, n_train), g.slice(n_train, n_train + n_val),
                     g.slice(n_train + n_val, g.size())};
}

auto recent_neighbors(const TemporalGraph& g, NodeId node, double query_time, std::size_t k)
    -> NeighborBatch {
  if (k == 0) throw DomainError("recent_neighbors: K must be >= 1");
  NeighborBatch batch;
  batch.center = node;
  batch.query_time = query_time;
  const auto inc = g.incident(node);
  // First incident event at or after query_time.
  const auto cut = std::partition_point(inc.begin(), inc.end(), [&](std::size_t idx) {
    return g.event(idx).time < query_time;
  });
  const auto available = static_cast<std::size_t>(cut - inc.begin());
  const std::size_t take = std::min(k, available);
  batch.neighbors.reserve(take);
  batch.delta_ts.reserve(take);
  for (std::size_t i = 0; i < take; ++i) {
    const auto& e = g.event(*(cut - 1 - static_cast<std::ptrdiff_t>(i)));
    batch.neighbors.push_back(Neighbor{e.src == node ? e.dst : e.src, e.edge_feat, e.time});
    batch.delta_ts.push_back(query_time - e.time);
  }
  return batch;
}

auto train_sigma(const TemporalGraph& train) -> double {
  if (train.size() < 3) {
    throw DomainError(fmt::format("train_sigma needs at least 2 gaps, got {} events", train.size()));
  }
  const std::size_t n = train.size() - 1;
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += train.event(i + 1).time - train.event(i).time;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = (train.event(i + 1).time - train.event(i).time) - mean;
    ss += d * d;
  }
  const double sigma = std::sqrt(ss / static_cast<double>(n));
  if (!(sigma > 1e-12 * std::abs(mean))) {
    throw DegenerateDataError("train_sigma: all inter-event gaps are equal, kernels would be constant");
  }
  return sigma;
}

auto node_gaps(const TemporalGraph& g, NodeId node) -> std::vector<double> {
  const auto inc = g.incident(node);
  std::vector<double> gaps;
  for (std::size_t i = 1; i < inc.size(); ++i) {
    gaps.push_back(g.event(inc[i]).time - g.event(inc[i - 1]).time);
  }
  return gaps;
}

auto interarrival_histogram(const TemporalGraph& g, std::size_t bins) -> Histogram {
  if (bins == 0) throw DomainError("interarrival_histogram: bins must be >= 1");
  std::vector<double> gaps;
  for (NodeId v = 0; v < g.num_nodes(); ++v) {
    const auto ng = node_gaps(g, v);
    gaps.insert(gaps.end(), ng.begin(), ng.end());
  }
  Histogram h;
  if (gaps.empty()) return h;
  const double hi = *std::max_element(gaps.begin(), gaps.end());
  const double width = hi / static_cast<double>(bins);
  h.edges.resize(bins + 1);
  for (std::size_t b = 0; b <= bins; ++b) h.edges[b] = width * static_cast<double>(b);
  h.edges.back() = hi;
  h.counts.assign(bins, 0);
  for (double gap : gaps) {
    std::size_t b = 0;
    if (width > 0.0) {
      const double pos = std::ceil(gap / width) - 1.0;
      b = pos <= 0.0 ? 0 : std::min(bins - 1, static_cast<std::size_t>(pos));
    }
    ++h.counts[b];
  }
  return h;
}

auto spectral_entropy_of_series(std::span<const double> series) -> double {
  const std::size_t n = series.size();
  const std::size_t top = n == 0 ? 0 : (n - 1) / 2;
  std::vector<double> mags(top);
  double total = 0.0;
  double scale_ref = 0.0;
  for (double x : series) scale_ref += std::abs(x);
  for (std::size_t f = 1; f <= top; ++f) {
    double re = 0.0;
    double im = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double angle = -2.0 * std::numbers::pi * static_cast<double>(f * k % n) /
                           static_cast<double>(n);
      re += series[k] * std::cos(angle);
      im += series[k] * std::sin(angle);
    }
    mags[f - 1] = std::hypot(re, im);
    total += mags[f - 1];
  }
  // No energy away from the zero frequency: a single (DC) component.
  if (!(total > 1e-12 * scale_ref)) return 0.0;
  double h = 0.0;
  for (double m : mags) {
    const double p = m / total;
    if (p > 0.0) h -= p * std::log(p);
  }
  return std::max(h, 0.0);
}

auto spectral_entropy(const TemporalGraph& g, NodeId node) -> double {
  const auto gaps = node_gaps(g, node);
  if (gaps.size() < 3) {
    throw DomainError(fmt::format("spectral_entropy: node {} has {} events, needs >= 4", node,
                                  gaps.size() + (g.incident(node).empty() ? 0 : 1)));
  }
  return spectral_entropy_of_series(gaps);
}

}  // namespace keat
