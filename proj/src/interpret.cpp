#include "nnm/interpret.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include <spdlog/spdlog.h>

#include "nnm/error.hpp"

namespace nnm {

TagVector tag_vector(const NnmModel& model, std::span<const Id> items, std::string tag) {
  if (model.mode() != Mode::binary) throw ConfigError("tag vectors need a binary-mode model");
  if (items.empty()) throw PreconditionError("tag '" + tag + "' has no items");
  TagVector out{std::move(tag), std::vector<double>(static_cast<std::size_t>(model.dimension()), 0.0)};
  for (const Id id : items) {
    const auto e = model.item(model.items().at(id, "item"));
    for (std::size_t k = 0; k < e.size(); ++k) out.entries[k] += e[k];
  }
  for (double& v : out.entries) v /= static_cast<double>(items.size());
  return out;
}

double StereotypeProfile::value(std::size_t tag, int omega) const {
  if (tag >= tags.size() || omega < 1 || omega > dimension) {
    throw LookupError("profile cell (" + std::to_string(tag) + ", " + std::to_string(omega) + ") out of range");
  }
  return values[tag * static_cast<std::size_t>(dimension) + static_cast<std::size_t>(omega - 1)];
}

bool StereotypeProfile::guess_like(std::size_t tag, int omega) const { return value(tag, omega) >= 0.5; }

std::string StereotypeProfile::to_csv() const {
  std::ostringstream os;
  os << "tag,omega,value,guess\n";
  char buffer[32];
  for (std::size_t g = 0; g < tags.size(); ++g) {
    for (int w = 1; w <= dimension; ++w) {
      std::snprintf(buffer, sizeof buffer, "%.6f", value(g, w));
      os << tags[g] << ',' << w << ',' << buffer << ',' << (guess_like(g, w) ? "like" : "dislike") << '\n';
    }
  }
  return os.str();
}

StereotypeProfile stereotype_profiles(const NnmModel& model, const TagIndex& tags) {
  if (model.mode() != Mode::binary) throw ConfigError("stereotype profiles need a binary-mode model");
  StereotypeProfile profile;
  profile.dimension = model.dimension();
  for (const auto& tag : tags.tags()) {
    std::vector<Id> modeled;
    std::copy_if(tag.items.begin(), tag.items.end(), std::back_inserter(modeled),
                 [&](Id id) { return model.items().contains(id); });
    if (modeled.empty()) {
      spdlog::warn("tag '{}' has no items in the model; skipped", tag.name);
      profile.skipped.push_back(tag.name);
      continue;
    }
    const auto v = tag_vector(model, modeled, tag.name);
    profile.tags.push_back(tag.name);
    profile.values.insert(profile.values.end(), v.entries.begin(), v.entries.end());
  }
  return profile;
}

std::vector<RankedItem> stereotype_item_lists(const NnmModel& model, const RatingDataset& dataset,
                                              int omega, double like_threshold, std::size_t top) {
  if (model.mode() != Mode::binary) throw ConfigError("stereotype item lists need a binary-mode model");
  if (omega < 1 || omega > model.dimension()) {
    throw ConfigError("stereotype " + std::to_string(omega) + " outside 1.." + std::to_string(model.dimension()));
  }
  std::vector<RankedItem> out;
  for (std::size_t i = 0; i < model.items().size(); ++i) {
    const double like = model.item(i)[static_cast<std::size_t>(omega - 1)];
    if (like < like_threshold) continue;
    const Id id = model.items().id(i);
    const auto d = dataset.items().find(id);
    out.push_back({id, d ? dataset.item_ratings(*d).size() : 0, like});
  }
  std::sort(out.begin(), out.end(), [](const RankedItem& a, const RankedItem& b) {
    return a.ratings != b.ratings ? a.ratings > b.ratings : a.item < b.item;
  });
  if (out.size() > top) out.resize(top);
  return out;
}

// ---------------------------------------------------------------------------
// Hierarchy

bool HierarchyGraph::has_edge(std::size_t from, std::size_t to) const {
  return std::binary_search(edges.begin(), edges.end(), HierarchyEdge{from, to});
}

bool HierarchyGraph::has_edge(const std::string& from, const std::string& to) const {
  const auto a = std::find(vertices.begin(), vertices.end(), from);
  const auto b = std::find(vertices.begin(), vertices.end(), to);
  if (a == vertices.end() || b == vertices.end()) return false;
  return has_edge(static_cast<std::size_t>(a - vertices.begin()), static_cast<std::size_t>(b - vertices.begin()));
}

bool epsilon_contained(std::span<const double> inner, std::span<const double> outer, double epsilon) {
  const double norm = std::accumulate(inner.begin(), inner.end(), 0.0);
  return dot(outer, inner) >= (1.0 - epsilon) * norm;
}

HierarchyGraph hierarchy_edges(std::span<const TagVector> tags, double epsilon) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw ConfigError("epsilon must lie in [0, 1]");
  if (tags.empty()) throw PreconditionError("hierarchy needs at least one tag vector");
  HierarchyGraph g;
  g.epsilon = epsilon;
  for (std::size_t t = 0; t < tags.size(); ++t) {
    if (tags[t].entries.size() != tags.front().entries.size()) {
      throw PreconditionError("tag vectors differ in length");
    }
    g.vertices.push_back(tags[t].tag);
    if (std::all_of(tags[t].entries.begin(), tags[t].entries.end(), [](double v) { return v == 0.0; })) {
      g.zero_norm.push_back(t);
      spdlog::warn("tag '{}' has a zero tag vector and is contained in every tag", tags[t].tag);
    }
  }
  for (std::size_t a = 0; a < tags.size(); ++a) {
    for (std::size_t b = 0; b < tags.size(); ++b) {
      if (a != b && epsilon_contained(tags[b].entries, tags[a].entries, epsilon)) g.edges.push_back({a, b});
    }
  }
  return g;
}

HierarchyGraph without_tags(const HierarchyGraph& graph, const std::set<std::string>& exclude) {
  HierarchyGraph out;
  out.epsilon = graph.epsilon;
  std::vector<std::size_t> remap(graph.vertices.size(), SIZE_MAX);
  for (std::size_t v = 0; v < graph.vertices.size(); ++v) {
    if (exclude.contains(graph.vertices[v])) continue;
    remap[v] = out.vertices.size();
    out.vertices.push_back(graph.vertices[v]);
  }
  for (const auto& e : graph.edges) {
    if (remap[e.from] != SIZE_MAX && remap[e.to] != SIZE_MAX) out.edges.push_back({remap[e.from], remap[e.to]});
  }
  for (const auto v : graph.zero_norm) {
    if (remap[v] != SIZE_MAX) out.zero_norm.push_back(remap[v]);
  }
  return out;
}

HierarchyGraph transitive_reduction(const HierarchyGraph& graph) {
  const std::size_t n = graph.vertices.size();
  std::vector<std::vector<char>> reach(n, std::vector<char>(n, 0));
  for (const auto& e : graph.edges) reach[e.from][e.to] = 1;
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      if (reach[i][k])
        for (std::size_t j = 0; j < n; ++j)
          if (reach[k][j]) reach[i][j] = 1;

  std::vector<std::size_t> component(n);
  for (std::size_t v = 0; v < n; ++v) {
    component[v] = v;
    for (std::size_t w = 0; w < v; ++w) {
      if (reach[v][w] && reach[w][v]) {
        component[v] = component[w];
        break;
      }
    }
  }

  HierarchyGraph out = graph;
  out.edges.clear();
  for (const auto& e : graph.edges) {
    const auto ca = component[e.from];
    const auto cb = component[e.to];
    bool implied = false;
    if (ca != cb) {
      for (std::size_t m = 0; m < n && !implied; ++m) {
        implied = component[m] != ca && component[m] != cb && reach[e.from][m] && reach[m][e.to];
      }
    }
    if (!implied) out.edges.push_back(e);
  }
  return out;
}

namespace {

std::string dot_id(const std::string& name) {
  std::string out = "\"";
  for (const char c : name) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + '"';
}

}  // namespace

std::string export_dot(const HierarchyGraph& graph, const DotOptions& options) {
  HierarchyGraph g = without_tags(graph, options.exclude);
  if (options.transitive_reduction) g = transitive_reduction(g);
  if (g.vertices.empty()) return "digraph {}\n";
  std::ostringstream os;
  os << "digraph hierarchy {\n";
  for (std::size_t v = 0; v < g.vertices.size(); ++v) {
    os << "  " << dot_id(g.vertices[v]);
    if (std::find(g.zero_norm.begin(), g.zero_norm.end(), v) != g.zero_norm.end()) os << " [style=dashed]";
    os << ";\n";
  }
  for (const auto& e : g.edges) {
    os << "  " << dot_id(g.vertices[e.from]) << " -> " << dot_id(g.vertices[e.to]) << ";\n";
  }
  os << "}\n";
  return os.str();
}

}  // namespace nnm
