#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "odsynth/core/dataset.hpp"
#include "odsynth/core/error.hpp"
#include "odsynth/core/matrix.hpp"
#include "odsynth/core/seed.hpp"
#include "odsynth/priors/ranges.hpp"

namespace odsynth::scm {

enum class Activation { relu, tanh, sigmoid, identity };

inline std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
    case Activation::sigmoid: return "sigmoid";
    case Activation::identity: return "identity";
  }
  return "identity";
}

inline Activation parse_activation(std::string_view s) {
  for (auto a : {Activation::relu, Activation::tanh, Activation::sigmoid, Activation::identity})
    if (to_string(a) == s) return a;
  throw ConfigError("unknown activation '" + std::string(s) + "'");
}

inline double activate(Activation a, double x) noexcept {
  switch (a) {
    case Activation::relu: return x > 0.0 ? x : 0.0;
    case Activation::tanh: return std::tanh(x);
    case Activation::sigmoid: return 1.0 / (1.0 + std::exp(-x));
    case Activation::identity: return x;
  }
  return x;
}

struct ScmConfig {
  IntRange depth{3, 5};
  IntRange width{20, 40};
  RealRange drop_rate{0.4, 0.6};
  IntRange dim{2, 100};
  std::vector<Activation> activations{Activation::relu, Activation::tanh, Activation::sigmoid};
  RealRange inflation{5.0, 10.0};
  double p_break = 0.1;
  double p_flip = 0.1;
  RealRange contamination{0.02, 0.2};
  bool allow_noise_only = false;
  std::size_t max_graph_retries = 100;
  std::size_t max_perturb_retries = 100;

  void validate() const {
    require_range(depth.lo >= 2 && depth.lo <= depth.hi, "scm depth >= 2");
    require_range(width.lo >= 1 && width.lo <= width.hi, "scm width >= 1");
    require_range(drop_rate.within(0.0, 1.0), "scm drop rate within [0,1]");
    require_range(dim.within(1, 100000) && dim.lo >= 1, "scm dim >= 1");
    require_range(!activations.empty(), "scm activation pool non-empty");
    require_range(inflation.lo > 0.0 && inflation.lo <= inflation.hi, "scm inflation positive");
    require_range(p_break >= 0.0 && p_flip >= 0.0 && p_break + p_flip <= 1.0, "scm p_break + p_flip <= 1");
    require_range(contamination.within(0.0, 1.0), "scm contamination within [0,1]");
    require_range(max_graph_retries >= 1 && max_perturb_retries >= 1, "scm retry caps >= 1");
  }
};

// Edge-masked layered MLP. Node ids are global: layer l occupies
// [offset(l), offset(l) + layer_sizes[l]). weights[l] maps layer l to l+1 and
// is stored (size[l+1] x size[l]); masked edges hold weight 0 and mask 0.
struct ScmGraph {
  std::vector<std::size_t> layer_sizes;
  std::vector<Matrix> weights;
  std::vector<std::vector<std::uint8_t>> mask;
  Activation activation = Activation::tanh;
  std::vector<std::size_t> features;
  std::size_t target = 0;
  std::vector<double> noise_scale;
  double drop_rate = 0.0;

  std::size_t node_count() const noexcept {
    std::size_t n = 0;
    for (auto s : layer_sizes) n += s;
    return n;
  }
  std::size_t dim() const noexcept { return features.size(); }

  std::size_t offset(std::size_t layer) const noexcept {
    std::size_t o = 0;
    for (std::size_t l = 0; l < layer; ++l) o += layer_sizes[l];
    return o;
  }

  bool edge_active(std::size_t l, std::size_t to, std::size_t from) const {
    return mask[l][to * layer_sizes[l] + from] != 0;
  }

  // Children lists over edges that are present and carry non-zero weight.
  std::vector<std::vector<std::size_t>> children() const {
    std::vector<std::vector<std::size_t>> ch(node_count());
    for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
      const std::size_t o_from = offset(l), o_to = offset(l + 1);
      for (std::size_t to = 0; to < layer_sizes[l + 1]; ++to)
        for (std::size_t from = 0; from < layer_sizes[l]; ++from)
          if (edge_active(l, to, from) && weights[l](to, from) != 0.0) ch[o_from + from].push_back(o_to + to);
    }
    return ch;
  }

  // Node reachable-from flags (a node reaches itself).
  std::vector<std::uint8_t> descendants_of(std::span<const std::size_t> roots) const {
    const auto ch = children();
    std::vector<std::uint8_t> seen(node_count(), 0);
    std::vector<std::size_t> stack(roots.begin(), roots.end());
    while (!stack.empty()) {
      const auto v = stack.back();
      stack.pop_back();
      if (seen[v]) continue;
      seen[v] = 1;
      for (auto c : ch[v]) stack.push_back(c);
    }
    return seen;
  }

  // Nodes with a directed path (possibly empty) to some selected feature.
  std::vector<std::size_t> feature_ancestors() const {
    const auto ch = children();
    std::vector<std::uint8_t> hit(node_count(), 0);
    for (auto f : features) hit[f] = 1;
    // Layers are a topological order; sweep backwards.
    for (std::size_t v = node_count(); v-- > 0;)
      for (auto c : ch[v])
        if (hit[c]) hit[v] = 1;
    std::vector<std::size_t> out;
    for (std::size_t v = 0; v < node_count(); ++v)
      if (hit[v]) out.push_back(v);
    return out;
  }

  // One topological pass. `noise` holds one standard-normal draw per node;
  // the input layer takes it as its value, other nodes add it (scaled) to the
  // weighted parent sum before the activation.
  void forward(std::span<const double> noise, std::span<double> values) const {
    const std::size_t n0 = layer_sizes[0];
    for (std::size_t i = 0; i < n0; ++i) values[i] = noise_scale[i] * noise[i];
    for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
      const std::size_t o_from = offset(l), o_to = offset(l + 1);
      const Matrix& w = weights[l];
      for (std::size_t to = 0; to < layer_sizes[l + 1]; ++to) {
        double acc = 0.0;
        auto wrow = w.row(to);
        for (std::size_t from = 0; from < layer_sizes[l]; ++from) acc += wrow[from] * values[o_from + from];
        const std::size_t v = o_to + to;
        values[v] = activate(activation, acc + noise_scale[v] * noise[v]);
      }
    }
  }
};

inline nlohmann::json to_json(const ScmGraph& g) {
  return {{"layer_sizes", g.layer_sizes}, {"activation", to_string(g.activation)},
          {"drop_rate", g.drop_rate},     {"features", g.features},
          {"target", g.target}};
}

namespace detail {

inline ScmGraph draw_structure(const ScmConfig& cfg, Rng& rng) {
  ScmGraph g;
  const auto depth = static_cast<std::size_t>(cfg.depth.draw(rng));
  const auto width = static_cast<std::size_t>(cfg.width.draw(rng));
  g.layer_sizes.assign(depth, width);
  g.drop_rate = cfg.drop_rate.draw(rng);
  g.activation = cfg.activations[uniform_index(rng, cfg.activations.size())];
  for (std::size_t l = 0; l + 1 < depth; ++l) {
    Matrix w(width, width);
    std::vector<std::uint8_t> m(width * width);
    for (std::size_t e = 0; e < width * width; ++e) {
      const double weight = standard_normal(rng);
      const bool keep = !(uniform01(rng) < g.drop_rate);
      m[e] = keep ? 1 : 0;
      w.values()[e] = keep ? weight : 0.0;
    }
    g.weights.push_back(std::move(w));
    g.mask.push_back(std::move(m));
  }
  g.noise_scale.assign(g.node_count(), 1.0);
  return g;
}

}  // namespace detail

// Materializes a graph and picks d distinct feature nodes plus a distinct
// target among nodes touching at least one edge. Redraws the whole structure
// when too few such nodes exist.
inline ScmGraph sample_scm(const ScmConfig& cfg, std::size_t d, const SeedPath& seed) {
  cfg.validate();
  if (d == 0) throw DomainError("sample_scm: d must be >= 1");
  Rng rng = seed.rng();
  for (std::size_t attempt = 0; attempt < cfg.max_graph_retries; ++attempt) {
    ScmGraph g = detail::draw_structure(cfg, rng);
    std::vector<std::uint8_t> touched(g.node_count(), 0);
    for (std::size_t l = 0; l + 1 < g.layer_sizes.size(); ++l) {
      const std::size_t o_from = g.offset(l), o_to = g.offset(l + 1);
      for (std::size_t to = 0; to < g.layer_sizes[l + 1]; ++to)
        for (std::size_t from = 0; from < g.layer_sizes[l]; ++from)
          if (g.edge_active(l, to, from)) touched[o_from + from] = touched[o_to + to] = 1;
    }
    std::vector<std::size_t> eligible;
    for (std::size_t v = 0; v < g.node_count(); ++v)
      if (touched[v] || cfg.allow_noise_only) eligible.push_back(v);
    if (eligible.size() < d + 1) continue;
    const auto pick = sample_without_replacement(rng, eligible.size(), d + 1);
    for (std::size_t i = 0; i < d; ++i) g.features.push_back(eligible[pick[i]]);
    g.target = eligible[pick[d]];
    return g;
  }
  throw GenerationStalled("sample_scm: too few connected nodes for d features after retries");
}

inline ScmGraph sample_scm(const ScmConfig& cfg, const SeedPath& seed) {
  Rng rng = seed.child(0).rng();
  const auto d = static_cast<std::size_t>(cfg.dim.draw(rng));
  return sample_scm(cfg, d, seed.child(1));
}

inline Matrix forward_sample(const ScmGraph& g, std::size_t n, const SeedPath& seed) {
  Rng rng = seed.rng();
  const std::size_t nodes = g.node_count();
  std::vector<double> noise(nodes), values(nodes);
  Matrix out(n, g.dim());
  for (std::size_t i = 0; i < n; ++i) {
    for (auto& e : noise) e = standard_normal(rng);
    g.forward(noise, values);
    for (std::size_t j = 0; j < g.dim(); ++j) out(i, j) = values[g.features[j]];
  }
  return out;
}

// Per point: one selected feature node gets its noise
// redrawn from N(0, s); the forward pass carries the change to descendants.
inline Matrix measurement_outliers(const ScmGraph& g, std::size_t n, double s, const SeedPath& seed,
                                   std::vector<std::size_t>* chosen = nullptr) {
  if (!(s > 0.0)) throw DomainError("measurement_outliers: s must be positive");
  const auto& candidates = g.features;
  Rng rng = seed.rng();
  const std::size_t nodes = g.node_count();
  std::vector<double> noise(nodes), values(nodes);
  Matrix out(n, g.dim());
  const double sd = std::sqrt(s);
  for (std::size_t i = 0; i < n; ++i) {
    for (auto& e : noise) e = standard_normal(rng);
    const auto v = candidates[uniform_index(rng, candidates.size())];
    noise[v] *= sd;
    if (chosen) chosen->push_back(v);
    g.forward(noise, values);
    for (std::size_t j = 0; j < g.dim(); ++j) out(i, j) = values[g.features[j]];
  }
  return out;
}

struct Perturbation {
  ScmGraph graph;
  std::size_t broken = 0;
  std::size_t flipped = 0;
  std::size_t attempts = 0;
};

// Breaks (weight := 0) or negates each present edge with p_break / p_flip,
// redrawing until a selected feature sits downstream of a perturbed edge.
inline Perturbation perturb_edges(const ScmGraph& g, double p_break, double p_flip, std::size_t max_retries,
                                  const SeedPath& seed) {
  if (p_break < 0.0 || p_flip < 0.0 || p_break + p_flip > 1.0)
    throw DomainError("perturb_edges: need p_break, p_flip >= 0 and p_break + p_flip <= 1");
  Rng rng = seed.rng();
  for (std::size_t attempt = 1; attempt <= max_retries; ++attempt) {
    Perturbation p{g, 0, 0, attempt};
    std::vector<std::size_t> heads;
    for (std::size_t l = 0; l + 1 < g.layer_sizes.size(); ++l) {
      const std::size_t o_to = g.offset(l + 1);
      for (std::size_t to = 0; to < g.layer_sizes[l + 1]; ++to) {
        for (std::size_t from = 0; from < g.layer_sizes[l]; ++from) {
          if (!g.edge_active(l, to, from)) continue;
          const double u = uniform01(rng);
          double& w = p.graph.weights[l](to, from);
          if (u < p_break) {
            if (w != 0.0) heads.push_back(o_to + to);
            w = 0.0;
            ++p.broken;
          } else if (u < p_break + p_flip) {
            if (w != 0.0) heads.push_back(o_to + to);
            w = -w;
            ++p.flipped;
          }
        }
      }
    }
    if (heads.empty()) continue;
    const auto reach = g.descendants_of(heads);
    for (auto f : g.features)
      if (reach[f]) return p;
  }
  throw GenerationStalled("structural_outliers: no perturbation reached a selected feature after retries");
}

inline Matrix structural_outliers(const ScmGraph& g, std::size_t n, double p_break, double p_flip,
                                  const SeedPath& seed, std::size_t max_retries = 100) {
  const auto p = perturb_edges(g, p_break, p_flip, max_retries, seed.child(0));
  return forward_sample(p.graph, n, seed.child(1));
}

inline LabeledDataset generate_scm_dataset(const ScmConfig& cfg, Archetype archetype, std::size_t n_in,
                                           std::size_t n_out, const SeedPath& seed) {
  if (archetype != Archetype::measurement && archetype != Archetype::structural)
    throw ConfigError("scm archetype must be measurement or structural");
  if (n_in + n_out == 0) throw DomainError("generate_scm_dataset: counts must not both be zero");
  // Structural outliers need a selected feature below the input layer; a
  // graph without one is redrawn.
  ScmGraph g = sample_scm(cfg, seed.child(0));
  if (archetype == Archetype::structural && n_out > 0) {
    const std::size_t first_hidden = g.layer_sizes[0];
    auto has_parented_feature = [&](const ScmGraph& gr) {
      return std::any_of(gr.features.begin(), gr.features.end(), [&](std::size_t f) { return f >= first_hidden; });
    };
    for (std::size_t attempt = 1; !has_parented_feature(g); ++attempt) {
      if (attempt >= cfg.max_graph_retries)
        throw GenerationStalled("generate_scm_dataset: no selected feature below the input layer");
      g = sample_scm(cfg, seed.child(0, attempt));
    }
  }
  Rng rng = seed.child(1).rng();
  const double s = cfg.inflation.draw(rng);
  const Matrix inliers = forward_sample(g, n_in, seed.child(2));
  DatasetMeta meta;
  meta.prior = PriorKind::scm;
  meta.archetype = archetype;
  meta.seed = seed;
  meta.hyperparameters = to_json(g);
  Matrix outliers(0, g.dim());
  if (n_out > 0) {
    if (archetype == Archetype::measurement) {
      outliers = measurement_outliers(g, n_out, s, seed.child(3));
      meta.hyperparameters["inflation"] = s;
    } else {
      const auto p = perturb_edges(g, cfg.p_break, cfg.p_flip, cfg.max_perturb_retries, seed.child(3));
      outliers = forward_sample(p.graph, n_out, seed.child(4));
      meta.hyperparameters["p_break"] = cfg.p_break;
      meta.hyperparameters["p_flip"] = cfg.p_flip;
      meta.hyperparameters["edges_broken"] = p.broken;
      meta.hyperparameters["edges_flipped"] = p.flipped;
    }
  }
  return assemble_dataset(inliers, outliers, std::move(meta), seed.child(5));
}

}  // namespace odsynth::scm
