#include "qgraph/graph.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <queue>
#include <set>
#include <sstream>

namespace qgraph {

namespace {

std::string edge_subject(const EdgeSpec& e) { return "edge:" + e.id; }

}  // namespace

std::vector<Violation> validate(const GraphSpec& spec) {
  std::vector<Violation> out;
  if (!(spec.u > 0.0) || !std::isfinite(spec.u)) {
    out.push_back({"graph", "u", "lower length bound u must be a positive finite number"});
  }

  std::set<std::string> vertex_set;
  for (const auto& v : spec.vertices) {
    if (!vertex_set.insert(v).second) {
      out.push_back({"vertex:" + v, "duplicate-id", "vertex id '" + v + "' is not unique"});
    }
  }

  std::set<std::string> edge_ids;
  std::map<std::string, std::size_t> degree;
  for (const auto& v : spec.vertices) degree[v] = 0;

  for (const auto& e : spec.edges) {
    if (!edge_ids.insert(e.id).second) {
      out.push_back({edge_subject(e), "duplicate-id", "edge id '" + e.id + "' is not unique"});
    }
    if (std::isnan(e.length) || e.length <= 0.0) {
      out.push_back({edge_subject(e), "length", "edge length must be positive"});
    } else if (spec.u > 0.0 && e.length < spec.u) {
      std::ostringstream msg;
      msg << "length " << e.length << " is below the lower bound u = " << spec.u;
      out.push_back({edge_subject(e), "LB", msg.str()});
    }

    if (!vertex_set.count(e.from)) {
      out.push_back({edge_subject(e), "endpoint", "initial vertex '" + e.from + "' is not a vertex"});
    } else {
      ++degree[e.from];
    }

    const bool infinite = std::isinf(e.length) && e.length > 0.0;
    if (infinite) {
      if (e.to) {
        out.push_back({edge_subject(e), "endpoint", "an infinite edge has no terminal vertex"});
      }
      if (e.truncation && !(*e.truncation > 0.0 && std::isfinite(*e.truncation))) {
        out.push_back({edge_subject(e), "length", "truncation length must be positive and finite"});
      }
    } else {
      if (!e.to) {
        out.push_back({edge_subject(e), "endpoint", "a finite edge needs a terminal vertex"});
      } else if (!vertex_set.count(*e.to)) {
        out.push_back({edge_subject(e), "endpoint", "terminal vertex '" + *e.to + "' is not a vertex"});
      } else {
        ++degree[*e.to];
      }
      if (e.truncation) {
        out.push_back({edge_subject(e), "length", "truncation is only meaningful for infinite edges"});
      }
    }
  }

  for (const auto& v : spec.vertices) {
    if (degree[v] == 0) {
      out.push_back({"vertex:" + v, "F", "vertex '" + v + "' has degree 0"});
    }
  }
  return out;
}

MetricGraph MetricGraph::build(const GraphSpec& spec) {
  auto violations = validate(spec);
  if (!violations.empty()) {
    std::ostringstream msg;
    msg << "invalid metric graph:";
    for (const auto& v : violations) msg << "\n  " << v.subject << " [" << v.condition << "] " << v.message;
    throw InputError(msg.str());
  }

  MetricGraph g;
  g.u_ = spec.u;
  g.vertex_ids_ = spec.vertices;
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < spec.vertices.size(); ++i) index[spec.vertices[i]] = i;

  for (const auto& es : spec.edges) {
    Edge e;
    e.id = es.id;
    e.length = es.length;
    e.init = index.at(es.from);
    if (es.to) e.term = index.at(*es.to);
    e.truncation = es.truncation;
    g.edges_.push_back(std::move(e));
  }

  const std::size_t nv = g.vertex_ids_.size();
  g.stars_.resize(nv);
  g.adjacency_.resize(nv);
  for (std::size_t v = 0; v < nv; ++v) g.stars_[v].vertex = v;
  g.init_slot_.assign(g.edges_.size(), 0);
  g.term_slot_.assign(g.edges_.size(), 0);
  for (std::size_t e = 0; e < g.edges_.size(); ++e) {
    const Edge& edge = g.edges_[e];
    g.init_slot_[e] = g.stars_[edge.init].ends.size();
    g.stars_[edge.init].ends.push_back({e, End::Init});
    if (edge.term) {
      g.term_slot_[e] = g.stars_[*edge.term].ends.size();
      g.stars_[*edge.term].ends.push_back({e, End::Term});
      if (!edge.is_loop()) {
        g.adjacency_[edge.init].push_back({*edge.term, edge.length});
        g.adjacency_[*edge.term].push_back({edge.init, edge.length});
      }
    }
  }

  g.component_.assign(nv, nv);
  for (std::size_t v = 0; v < nv; ++v) {
    if (g.component_[v] != nv) continue;
    const std::size_t c = g.num_components_++;
    std::vector<std::size_t> stack{v};
    g.component_[v] = c;
    while (!stack.empty()) {
      auto w = stack.back();
      stack.pop_back();
      for (const auto& adj : g.adjacency_[w]) {
        if (g.component_[adj.to] == nv) {
          g.component_[adj.to] = c;
          stack.push_back(adj.to);
        }
      }
    }
  }
  return g;
}

std::size_t MetricGraph::vertex_of(EdgeEnd end) const {
  const Edge& e = edges_.at(end.edge);
  if (end.end == End::Init) return e.init;
  if (!e.term) throw InputError("edge '" + e.id + "' has no terminal vertex");
  return *e.term;
}

std::size_t MetricGraph::slot_of(EdgeEnd end) const {
  if (end.end == End::Init) return init_slot_.at(end.edge);
  if (!edges_.at(end.edge).term) throw InputError("edge '" + edges_[end.edge].id + "' has no terminal vertex");
  return term_slot_.at(end.edge);
}

std::optional<std::size_t> MetricGraph::find_vertex(const std::string& id) const {
  auto it = std::find(vertex_ids_.begin(), vertex_ids_.end(), id);
  if (it == vertex_ids_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - vertex_ids_.begin());
}

std::optional<std::size_t> MetricGraph::find_edge(const std::string& id) const {
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    if (edges_[e].id == id) return e;
  }
  return std::nullopt;
}

bool MetricGraph::compact() const {
  return std::all_of(edges_.begin(), edges_.end(), [](const Edge& e) { return e.finite(); });
}

double MetricGraph::total_length() const {
  double s = 0.0;
  for (const auto& e : edges_) s += e.length;
  return s;
}

double MetricGraph::numeric_length(std::size_t e) const {
  const Edge& edge = edges_.at(e);
  if (edge.finite()) return edge.length;
  if (!edge.truncation) throw InputError("infinite edge '" + edge.id + "' has no truncation length");
  return *edge.truncation;
}

Point MetricGraph::point(std::size_t e, double t) const {
  if (e >= edges_.size()) throw InputError("unknown edge index " + std::to_string(e));
  const Edge& edge = edges_[e];
  if (!(t >= 0.0) || t > edge.length) {
    throw InputError("parameter t is outside [0, l(e)] on edge '" + edge.id + "'");
  }
  if (t == 0.0) return Point::vertex(edge.init);
  if (edge.finite() && t == edge.length) return Point::vertex(*edge.term);
  return Point::on_edge(e, t);
}

void MetricGraph::check_point(const Point& p) const {
  if (p.is_vertex()) {
    if (p.index >= vertex_ids_.size()) throw InputError("unknown vertex index " + std::to_string(p.index));
    return;
  }
  if (p.index >= edges_.size()) throw InputError("unknown edge index " + std::to_string(p.index));
  if (!(p.t > 0.0) || !(p.t < edges_[p.index].length)) {
    throw InputError("edge point must satisfy 0 < t < l(e) on edge '" + edges_[p.index].id + "'");
  }
}

DistanceField::DistanceField(const MetricGraph& g, const Point& origin) : g_(&g), origin_(origin) {
  g.check_point(origin);
  vertex_dist_.assign(g.num_vertices(), kInfinity);
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
  auto seed = [&](std::size_t v, double d) {
    if (d < vertex_dist_[v]) {
      vertex_dist_[v] = d;
      queue.push({d, v});
    }
  };
  if (origin.is_vertex()) {
    seed(origin.index, 0.0);
  } else {
    const Edge& e = g.edge(origin.index);
    seed(e.init, origin.t);
    if (e.term) seed(*e.term, e.length - origin.t);
  }
  while (!queue.empty()) {
    auto [d, v] = queue.top();
    queue.pop();
    if (d > vertex_dist_[v]) continue;
    for (const auto& adj : g.neighbours(v)) seed(adj.to, d + adj.length);
  }
}

double DistanceField::to_edge_point(std::size_t e, double t) const {
  const Edge& edge = g_->edge(e);
  double d = vertex_dist_[edge.init] + t;
  if (edge.term) d = std::min(d, vertex_dist_[*edge.term] + (edge.length - t));
  if (!origin_.is_vertex() && origin_.index == e) d = std::min(d, std::abs(t - origin_.t));
  return d;
}

double DistanceField::to(const Point& p) const {
  g_->check_point(p);
  if (p.is_vertex()) return vertex_dist_[p.index];
  return to_edge_point(p.index, p.t);
}

double DistanceField::ball_volume_on_edge(std::size_t e, double r) const {
  const Edge& edge = g_->edge(e);
  const double len = edge.length;
  // Up to three sublevel intervals: reached through i(e), through j(e), and
  // along the edge itself when the origin lies on it.
  std::vector<std::pair<double, double>> parts;
  const double a = vertex_dist_[edge.init];
  if (r >= a) parts.emplace_back(0.0, std::min(len, r - a));
  if (edge.term) {
    const double b = vertex_dist_[*edge.term];
    if (r >= b) parts.emplace_back(std::max(0.0, len - (r - b)), len);
  }
  if (!origin_.is_vertex() && origin_.index == e) {
    parts.emplace_back(std::max(0.0, origin_.t - r), std::min(len, origin_.t + r));
  }
  std::sort(parts.begin(), parts.end());
  double total = 0.0;
  double cur_lo = 0.0, cur_hi = -1.0;
  bool open = false;
  for (const auto& [lo, hi] : parts) {
    if (hi <= lo) continue;
    if (!open) {
      cur_lo = lo;
      cur_hi = hi;
      open = true;
    } else if (lo <= cur_hi) {
      cur_hi = std::max(cur_hi, hi);
    } else {
      total += cur_hi - cur_lo;
      cur_lo = lo;
      cur_hi = hi;
    }
  }
  if (open) total += cur_hi - cur_lo;
  return total;
}

double DistanceField::ball_volume(double r) const {
  if (r < 0.0) throw InputError("ball radius must be nonnegative");
  double total = 0.0;
  for (std::size_t e = 0; e < g_->num_edges(); ++e) total += ball_volume_on_edge(e, r);
  return total;
}

double distance(const MetricGraph& g, const Point& x, const Point& y) {
  g.check_point(y);
  return DistanceField(g, x).to(y);
}

double ball_volume(const MetricGraph& g, const Point& x0, double r) {
  return DistanceField(g, x0).ball_volume(r);
}

std::vector<EdgeSegment> segments(const MetricGraph& g, double max_len, double step) {
  if (!(step > 0.0) || !(max_len >= step)) throw InputError("segments need 0 < step <= max_len");
  std::vector<EdgeSegment> out;
  for (std::size_t e = 0; e < g.num_edges(); ++e) {
    const double len = g.numeric_length(e);
    const double w = std::min(max_len, len);
    const double slack = 1e-12 * len;
    double end = 0.0;
    for (std::size_t k = 0;; ++k) {
      const double t0 = static_cast<double>(k) * step;
      if (t0 + w > len + slack) break;
      end = std::min(len, t0 + w);
      out.push_back({e, t0, end});
    }
    if (end < len - slack) out.push_back({e, len - w, len});
  }
  return out;
}

}  // namespace qgraph
