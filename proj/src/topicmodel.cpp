#include "mailtopics/topicmodel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <unordered_set>

#include "mailtopics/error.hpp"
#include "mailtopics/kernels.hpp"

namespace mailtopics {

void ModelConfig::validate() const {
  if (min_topic_size < 2) throw Error("invalid_config", "min_topic_size must be >= 2");
  if (reduce_out_dim < 1) throw Error("invalid_config", "reduce_out_dim must be >= 1");
  if (min_df < 1) throw Error("invalid_config", "min_df must be >= 1");
  if (top_n_keywords < 1) throw Error("invalid_config", "top_n_keywords must be >= 1");
  if (nr_topics && *nr_topics < 1) throw Error("invalid_config", "nr_topics must be >= 1");
  if (cluster_algorithm != "density" && cluster_algorithm != "kmeans")
    throw Error("invalid_config", "cluster_algorithm must be density or kmeans");
  if (cluster_algorithm == "kmeans" && !kmeans_k) throw Error("invalid_config", "kmeans requires kmeans_k");
}

std::vector<int> FittedTopicModel::uncovered_topics() const {
  std::vector<int> out;
  for (int t = -1; t < num_topics(); ++t)
    if (!derived_map.count(t)) out.push_back(t);
  return out;
}

std::vector<std::string> FittedTopicModel::derived_labels() const {
  std::set<std::string> s;
  for (const auto& [_, label] : derived_map) s.insert(label);
  return {s.begin(), s.end()};
}

namespace topicmodel {

namespace {

std::vector<std::string> top_representative_docs(const FittedTopicModel& m, int topic, size_t count = 3) {
  std::vector<std::pair<double, size_t>> scored;
  const auto& labels = m.clusters.labels;
  const double row_norm = m.ctfidf.weights.row_norm(topic);
  for (size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != topic) continue;
    const SparseVector v = represent::doc_ctfidf_vector(m.corpus.texts[i], m.ctfidf);
    const double vn = v.norm();
    const double sim = (vn == 0.0 || row_norm == 0.0) ? 0.0 : m.ctfidf.weights.row_dot(topic, v) / (vn * row_norm);
    scored.emplace_back(sim, i);
  }
  std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  std::vector<std::string> out;
  for (size_t i = 0; i < scored.size() && i < count; ++i) out.push_back(m.corpus.ids[scored[i].second]);
  return out;
}

// Recomputes everything that derives from the current labels, keeping the vocabulary.
void refresh(FittedTopicModel& m) {
  const int K = m.clusters.K;
  m.clusters.sizes.assign(static_cast<size_t>(K), 0);
  for (int l : m.clusters.labels)
    if (l >= 0) ++m.clusters.sizes[l];
  m.clusters.centroids = geometry::label_centroids(m.corpus.reduced, m.clusters.labels, K);
  m.ctfidf = represent::fit_ctfidf(m.corpus.texts, m.clusters.labels, m.ctfidf.vocabulary);
  m.representations.clear();
  m.representative_docs.clear();
  for (int k = 0; k < K; ++k) {
    m.representations.push_back(represent::topic_keywords(m.ctfidf, k, m.config.top_n_keywords));
    m.representative_docs[k] = top_representative_docs(m, k);
  }
}

std::string derived_for(const FittedTopicModel& m, int topic) {
  const auto it = m.derived_map.find(topic);
  return it == m.derived_map.end() ? std::string() : it->second;
}

}  // namespace

FittedTopicModel fit(std::span<const CleanDocument> docs, const ModelConfig& cfg, const EmbeddingProvider& provider) {
  cfg.validate();
  FittedTopicModel m;
  m.config = cfg;
  for (const auto& d : docs) {
    m.corpus.ids.push_back(d.email_id);
    m.corpus.texts.push_back(d.text);
  }

  RowMatrix embeddings = provider.embed_batch(m.corpus.texts);
  if (!cfg.seed_topics.empty()) {
    std::vector<std::vector<std::string>> seeds;
    for (const auto& s : cfg.seed_topics) seeds.push_back(s.keywords);
    embeddings = represent::apply_seed_topics(embeddings, seeds, provider, cfg.seed_blend);
  }
  m.reducer = geometry::fit_reducer(embeddings, cfg.reduce_out_dim, cfg.seed);
  m.corpus.reduced = geometry::project_batch(m.reducer, embeddings);

  ClusterConfig ccfg;
  ccfg.algorithm =
      cfg.cluster_algorithm == "kmeans" ? ClusterConfig::Algorithm::KMeans : ClusterConfig::Algorithm::Density;
  ccfg.min_cluster_size = cfg.min_topic_size;
  ccfg.k = cfg.kmeans_k;
  ccfg.seed = cfg.seed;
  m.clusters = geometry::cluster(m.corpus.reduced, ccfg);
  if (m.clusters.K == 0) throw Error("no_classes", "clustering produced no topics");

  const std::unordered_set<std::string> stopwords(cfg.stopwords.begin(), cfg.stopwords.end());
  m.ctfidf.vocabulary = represent::build_vocabulary(m.corpus.texts, stopwords, cfg.min_df);
  refresh(m);
  if (cfg.nr_topics && *cfg.nr_topics < m.num_topics()) return reduce_topics(m, *cfg.nr_topics);
  return m;
}

FittedTopicModel reduce_outliers(const FittedTopicModel& model) {
  FittedTopicModel m = model;
  const int K = m.num_topics();
  if (K == 0) return m;
  std::vector<double> row_norms(static_cast<size_t>(K));
  for (int k = 0; k < K; ++k) row_norms[k] = m.ctfidf.weights.row_norm(k);

  auto& labels = m.clusters.labels;
  const auto n = static_cast<std::ptrdiff_t>(labels.size());
  std::vector<int> updated = labels;
#pragma omp parallel for schedule(dynamic, 32)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    if (labels[i] != -1) continue;
    const SparseVector v = represent::doc_ctfidf_vector(m.corpus.texts[i], m.ctfidf);
    const double vn = v.norm();
    if (vn == 0.0) continue;
    int best = -1;
    double best_sim = 0.0;
    for (int k = 0; k < K; ++k) {
      if (row_norms[k] == 0.0) continue;
      const double sim = m.ctfidf.weights.row_dot(k, v) / (vn * row_norms[k]);
      if (sim > best_sim) {
        best_sim = sim;
        best = k;
      }
    }
    updated[i] = best;
  }
  labels = std::move(updated);
  refresh(m);
  return m;
}

std::vector<double> distance_probabilities(std::span<const double> distances) {
  std::vector<double> p(distances.size());
  if (distances.empty()) return p;
  const double shift = *std::min_element(distances.begin(), distances.end());
  double total = 0.0;
  for (size_t k = 0; k < distances.size(); ++k) {
    p[k] = std::exp(-(distances[k] - shift));
    total += p[k];
  }
  for (double& v : p) v /= total;
  return p;
}

namespace {

TopicAssignment make_assignment(const FittedTopicModel& model, const EmbeddingProvider& provider,
                                const CleanDocument& doc, int topic, std::span<const double> distances) {
  TopicAssignment a;
  a.email_id = doc.email_id;
  a.model_topic = topic;
  a.truncated = provider.count_tokens(doc.text) > static_cast<std::size_t>(provider.max_tokens());
  if (model.config.calculate_probabilities) a.probabilities = distance_probabilities(distances);
  a.derived_label = derived_for(model, topic);
  return a;
}

}  // namespace

TopicAssignment transform(const FittedTopicModel& model, const EmbeddingProvider& provider, const CleanDocument& doc) {
  if (model.num_topics() == 0) throw Error("no_topics", "model has no topics");
  const ReducedVector p = geometry::project(model.reducer, provider.embed(doc.text));
  const auto nc = geometry::nearest_centroid(model.clusters, p);
  return make_assignment(model, provider, doc, nc.topic, nc.distances);
}

std::vector<TopicAssignment> transform_batch(const FittedTopicModel& model, const EmbeddingProvider& provider,
                                             std::span<const CleanDocument> docs) {
  if (model.num_topics() == 0) throw Error("no_topics", "model has no topics");
  std::vector<std::string> texts;
  texts.reserve(docs.size());
  for (const auto& d : docs) texts.push_back(d.text);
  const RowMatrix reduced = geometry::project_batch(model.reducer, provider.embed_batch(texts));
  RowMatrix distances;
  const std::vector<int> topics = kernels::parallel::nearest_centroids(reduced, model.clusters.centroids, distances);
  std::vector<TopicAssignment> out;
  out.reserve(docs.size());
  for (size_t i = 0; i < docs.size(); ++i) {
    const auto row = distances.row(static_cast<Eigen::Index>(i));
    out.push_back(make_assignment(model, provider, docs[i], topics[i],
                                  std::span<const double>(row.data(), static_cast<size_t>(row.size()))));
  }
  return out;
}

TopicHierarchy hierarchy(const FittedTopicModel& model) {
  const int K = model.num_topics();
  if (K < 2) throw Error("too_few_topics", "hierarchy needs at least two topics");
  const auto& W = model.ctfidf.weights;

  // Pairwise cosine distances between topic rows.
  std::vector<SparseVector> rows(static_cast<size_t>(K));
  for (int k = 0; k < K; ++k) {
    for (auto i = W.row_ptr[k]; i < W.row_ptr[k + 1]; ++i) {
      rows[k].indices.push_back(W.col_idx[i]);
      rows[k].values.push_back(W.values[i]);
    }
  }
  const int total_nodes = 2 * K - 1;
  std::vector<std::vector<double>> dist(static_cast<size_t>(total_nodes),
                                        std::vector<double>(static_cast<size_t>(total_nodes), 0.0));
  for (int a = 0; a < K; ++a)
    for (int b = a + 1; b < K; ++b) dist[a][b] = dist[b][a] = 1.0 - cosine_similarity(rows[a], rows[b]);

  std::vector<int> active(static_cast<size_t>(K));
  std::iota(active.begin(), active.end(), 0);
  std::vector<int> size(static_cast<size_t>(total_nodes), 1);
  TopicHierarchy h;
  h.leaves = K;
  for (int node = K; node < total_nodes; ++node) {
    // active stays sorted, so the first minimum found is the smallest id pair.
    int best_a = -1, best_b = -1;
    double best = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < active.size(); ++i) {
      for (size_t j = i + 1; j < active.size(); ++j) {
        const double d = dist[active[i]][active[j]];
        if (d < best) {
          best = d;
          best_a = active[i];
          best_b = active[j];
        }
      }
    }
    size[node] = size[best_a] + size[best_b];
    for (int other : active) {
      if (other == best_a || other == best_b) continue;
      const double d = (size[best_a] * dist[best_a][other] + size[best_b] * dist[best_b][other]) / size[node];
      dist[node][other] = dist[other][node] = d;
    }
    h.merges.push_back({best_a, best_b, best, node});
    std::erase(active, best_a);
    std::erase(active, best_b);
    active.push_back(node);
  }
  return h;
}

FittedTopicModel merge_topics(const FittedTopicModel& model, const std::vector<std::vector<int>>& groups) {
  const int K = model.num_topics();
  std::vector<int> group_of(static_cast<size_t>(K), -1);
  for (size_t g = 0; g < groups.size(); ++g) {
    if (groups[g].size() < 2) throw Error("invalid_groups", "each merge group needs at least two topics");
    for (int t : groups[g]) {
      if (t < 0 || t >= K) throw Error("unknown_topic", "topic " + std::to_string(t) + " out of range");
      if (group_of[t] != -1) throw Error("overlapping_groups", "topic " + std::to_string(t) + " appears twice");
      group_of[t] = static_cast<int>(g);
    }
  }

  // Units ordered by their smallest original id get contiguous new ids.
  std::vector<int> new_id(static_cast<size_t>(K), -1);
  std::vector<std::vector<int>> members;
  for (int t = 0; t < K; ++t) {
    if (new_id[t] != -1) continue;
    const int id = static_cast<int>(members.size());
    if (group_of[t] == -1) {
      members.push_back({t});
      new_id[t] = id;
    } else {
      std::vector<int> unit = groups[group_of[t]];
      std::sort(unit.begin(), unit.end());
      for (int u : unit) new_id[u] = id;
      members.push_back(std::move(unit));
    }
  }

  FittedTopicModel m = model;
  for (int& l : m.clusters.labels)
    if (l >= 0) l = new_id[l];
  m.clusters.K = static_cast<int>(members.size());

  m.custom_labels.clear();
  m.derived_map.clear();
  if (auto it = model.derived_map.find(-1); it != model.derived_map.end()) m.derived_map[-1] = it->second;
  for (size_t id = 0; id < members.size(); ++id) {
    for (int t : members[id]) {
      if (auto it = model.custom_labels.find(t); it != model.custom_labels.end()) {
        m.custom_labels[static_cast<int>(id)] = it->second;
        break;
      }
    }
    std::set<std::string> derived;
    bool complete = true;
    for (int t : members[id]) {
      auto it = model.derived_map.find(t);
      if (it == model.derived_map.end()) {
        complete = false;
      } else {
        derived.insert(it->second);
      }
    }
    if (complete && derived.size() == 1) m.derived_map[static_cast<int>(id)] = *derived.begin();
  }
  refresh(m);
  return m;
}

FittedTopicModel reduce_topics(const FittedTopicModel& model, int nr_topics) {
  const int K = model.num_topics();
  if (nr_topics < 1) throw Error("invalid_argument", "nr_topics must be >= 1");
  if (nr_topics >= K) return model;
  const TopicHierarchy h = hierarchy(model);
  std::vector<int> parent(static_cast<size_t>(2 * K - 1));
  std::iota(parent.begin(), parent.end(), 0);
  for (int s = 0; s < K - nr_topics; ++s) {
    parent[h.merges[s].left] = h.merges[s].node;
    parent[h.merges[s].right] = h.merges[s].node;
  }
  std::map<int, std::vector<int>> by_root;
  for (int t = 0; t < K; ++t) {
    int r = t;
    while (parent[r] != r) r = parent[r];
    by_root[r].push_back(t);
  }
  std::vector<std::vector<int>> groups;
  for (auto& [_, g] : by_root)
    if (g.size() >= 2) groups.push_back(g);
  return merge_topics(model, groups);
}

FittedTopicModel set_custom_labels(const FittedTopicModel& model, const std::map<int, std::string>& labels) {
  for (const auto& [t, label] : labels) {
    if (t < 0 || t >= model.num_topics()) throw Error("unknown_topic", "topic " + std::to_string(t) + " out of range");
    if (label.empty()) throw Error("invalid_label", "label for topic " + std::to_string(t) + " is empty");
  }
  FittedTopicModel m = model;
  for (const auto& [t, label] : labels) m.custom_labels[t] = label;
  return m;
}

FittedTopicModel set_derived_map(const FittedTopicModel& model, const std::map<int, std::string>& derived) {
  for (const auto& [t, label] : derived) {
    if (t < -1 || t >= model.num_topics())
      throw Error("unknown_topic", "topic " + std::to_string(t) + " out of range");
    if (label.empty()) throw Error("invalid_label", "derived label for topic " + std::to_string(t) + " is empty");
  }
  FittedTopicModel m = model;
  m.derived_map = derived;
  return m;
}

std::optional<ExperimentalLabel> second_topic(const TopicAssignment& assignment, const FittedTopicModel& model) {
  if (!assignment.probabilities || assignment.probabilities->size() < 2) return std::nullopt;
  const auto& p = *assignment.probabilities;
  std::vector<int> order(p.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return p[a] > p[b]; });
  const std::string top = derived_for(model, order[0]);
  const std::string second = derived_for(model, order[1]);
  if (second.empty() || second == top) return std::nullopt;
  return ExperimentalLabel{second, true};
}

std::vector<double> approximate_distribution(const FittedTopicModel& model, std::string_view text, int window,
                                             int stride) {
  if (window < 1 || stride < 1) throw Error("invalid_argument", "window and stride must be >= 1");
  const int K = model.num_topics();
  std::vector<double> scores(static_cast<size_t>(K), 0.0);
  if (K == 0) return scores;
  const auto tokens = represent::tokenize(text);
  std::vector<std::string> windows;
  const auto join = [&](size_t b, size_t e) {
    std::string s;
    for (size_t i = b; i < e; ++i) {
      if (i > b) s.push_back(' ');
      s.append(tokens[i]);
    }
    return s;
  };
  const auto n = tokens.size();
  const auto w = static_cast<size_t>(window);
  if (n > 0 && n <= w) {
    windows.push_back(join(0, n));
  } else {
    for (size_t b = 0; b + w <= n; b += static_cast<size_t>(stride)) windows.push_back(join(b, b + w));
  }
  std::vector<double> row_norms(static_cast<size_t>(K));
  for (int k = 0; k < K; ++k) row_norms[k] = model.ctfidf.weights.row_norm(k);
  for (const auto& win : windows) {
    const SparseVector v = represent::doc_ctfidf_vector(win, model.ctfidf);
    const double vn = v.norm();
    if (vn == 0.0) continue;
    for (int k = 0; k < K; ++k)
      if (row_norms[k] > 0.0) scores[k] += model.ctfidf.weights.row_dot(k, v) / (vn * row_norms[k]);
  }
  const double total = std::accumulate(scores.begin(), scores.end(), 0.0);
  if (total <= 0.0) {
    std::fill(scores.begin(), scores.end(), 1.0 / K);
  } else {
    for (double& s : scores) s /= total;
  }
  return scores;
}

TopicAssignment assign_long_email(const FittedTopicModel& model, const EmbeddingProvider& provider,
                                  const CleanDocument& doc, LongEmailStrategy strategy) {
  const auto tokens = represent::tokenize(doc.text);
  const auto limit = static_cast<size_t>(provider.max_tokens());
  std::vector<CleanDocument> segments;
  for (size_t b = 0; b < tokens.size() || b == 0; b += limit) {
    CleanDocument seg;
    seg.email_id = doc.email_id;
    for (size_t i = b; i < std::min(tokens.size(), b + limit); ++i) {
      if (i > b) seg.text.push_back(' ');
      seg.text.append(tokens[i]);
    }
    seg.word_count = std::min(tokens.size(), b + limit) - std::min(tokens.size(), b);
    segments.push_back(std::move(seg));
    if (tokens.empty()) break;
  }

  FittedTopicModel probing = model;
  probing.config.calculate_probabilities = true;
  std::vector<TopicAssignment> parts = transform_batch(probing, provider, segments);
  const auto confidence = [](const TopicAssignment& a) {
    return *std::max_element(a.probabilities->begin(), a.probabilities->end());
  };
  size_t chosen = 0;
  if (strategy == LongEmailStrategy::MaxProbability) {
    for (size_t i = 1; i < parts.size(); ++i)
      if (confidence(parts[i]) > confidence(parts[chosen])) chosen = i;
  } else {
    const auto key = [](const TopicAssignment& a) {
      return a.derived_label.empty() ? "topic:" + std::to_string(a.model_topic) : a.derived_label;
    };
    std::vector<std::string> order;
    std::map<std::string, int> votes;
    for (const auto& a : parts) {
      if (votes[key(a)]++ == 0) order.push_back(key(a));
    }
    std::string winner = order.front();
    for (const auto& k : order)
      if (votes[k] > votes[winner]) winner = k;
    bool found = false;
    for (size_t i = 0; i < parts.size(); ++i) {
      if (key(parts[i]) != winner) continue;
      if (!found || confidence(parts[i]) > confidence(parts[chosen])) chosen = i;
      found = true;
    }
  }
  TopicAssignment out = parts[chosen];
  if (!model.config.calculate_probabilities) out.probabilities.reset();
  out.truncated = false;
  out.experimental = true;
  return out;
}

}  // namespace topicmodel
}  // namespace mailtopics
