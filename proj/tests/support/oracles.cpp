#include "oracles.hpp"

#include <algorithm>
#include <functional>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "synth.hpp"

namespace oracle {

const std::vector<Letter>& serbian_alphabet() {
  static const std::vector<Letter> table{
      {"А", "A"}, {"Б", "B"}, {"В", "V"}, {"Г", "G"}, {"Д", "D"}, {"Ђ", "Đ"}, {"Е", "E"}, {"Ж", "Ž"},
      {"З", "Z"}, {"И", "I"}, {"Ј", "J"}, {"К", "K"}, {"Л", "L"}, {"Љ", "Lj"}, {"М", "M"}, {"Н", "N"},
      {"Њ", "Nj"}, {"О", "O"}, {"П", "P"}, {"Р", "R"}, {"С", "S"}, {"Т", "T"}, {"Ћ", "Ć"}, {"У", "U"},
      {"Ф", "F"}, {"Х", "H"}, {"Ц", "C"}, {"Ч", "Č"}, {"Џ", "Dž"}, {"Ш", "Š"},
      {"а", "a"}, {"б", "b"}, {"в", "v"}, {"г", "g"}, {"д", "d"}, {"ђ", "đ"}, {"е", "e"}, {"ж", "ž"},
      {"з", "z"}, {"и", "i"}, {"ј", "j"}, {"к", "k"}, {"л", "l"}, {"љ", "lj"}, {"м", "m"}, {"н", "n"},
      {"њ", "nj"}, {"о", "o"}, {"п", "p"}, {"р", "r"}, {"с", "s"}, {"т", "t"}, {"ћ", "ć"}, {"у", "u"},
      {"ф", "f"}, {"х", "h"}, {"ц", "c"}, {"ч", "č"}, {"џ", "dž"}, {"ш", "š"},
  };
  return table;
}

std::vector<std::vector<double>> brute_ctfidf(const std::vector<std::string>& texts, const std::vector<int>& labels,
                                              const std::vector<std::string>& terms) {
  int K = 0;
  for (int l : labels) K = std::max(K, l + 1);
  std::vector<std::vector<double>> tf(static_cast<size_t>(K), std::vector<double>(terms.size(), 0.0));
  for (size_t d = 0; d < texts.size(); ++d) {
    if (labels[d] < 0) continue;
    std::istringstream in(texts[d]);
    std::string word;
    while (in >> word)
      for (size_t t = 0; t < terms.size(); ++t)
        if (terms[t] == word) tf[static_cast<size_t>(labels[d])][t] += 1.0;
  }
  double total = 0.0;
  for (int c = 0; c < K; ++c)
    for (size_t t = 0; t < terms.size(); ++t) total += tf[static_cast<size_t>(c)][t];
  const double A = total / K;
  std::vector<std::vector<double>> W = tf;
  for (size_t t = 0; t < terms.size(); ++t) {
    double f = 0.0;
    for (int c = 0; c < K; ++c) f += tf[static_cast<size_t>(c)][t];
    for (int c = 0; c < K; ++c) W[static_cast<size_t>(c)][t] = f > 0 ? tf[static_cast<size_t>(c)][t] * std::log(1.0 + A / f) : 0.0;
  }
  return W;
}

Eigen jacobi(std::vector<std::vector<double>> a) {
  const size_t n = a.size();
  std::vector<std::vector<double>> v(n, std::vector<double>(n, 0.0));
  for (size_t i = 0; i < n; ++i) v[i][i] = 1.0;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (size_t p = 0; p < n; ++p)
      for (size_t q = p + 1; q < n; ++q) off += a[p][q] * a[p][q];
    if (off < 1e-30) break;
    for (size_t p = 0; p < n; ++p) {
      for (size_t q = p + 1; q < n; ++q) {
        if (std::abs(a[p][q]) < 1e-300) continue;
        const double theta = (a[q][q] - a[p][p]) / (2 * a[p][q]);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1));
        const double c = 1 / std::sqrt(t * t + 1);
        const double s = t * c;
        for (size_t k = 0; k < n; ++k) {
          const double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (size_t k = 0; k < n; ++k) {
          const double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
        for (size_t k = 0; k < n; ++k) {
          const double vkp = v[k][p], vkq = v[k][q];
          v[k][p] = c * vkp - s * vkq;
          v[k][q] = s * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](size_t x, size_t y) { return a[x][x] > a[y][y]; });
  Eigen out;
  for (size_t i : order) {
    out.values.push_back(a[i][i]);
    std::vector<double> col(n);
    for (size_t k = 0; k < n; ++k) col[k] = v[k][i];
    out.vectors.push_back(col);
  }
  return out;
}

std::vector<std::vector<double>> covariance(const std::vector<std::vector<double>>& x) {
  const size_t n = x.size(), d = x[0].size();
  std::vector<double> mean(d, 0.0);
  for (const auto& row : x)
    for (size_t j = 0; j < d; ++j) mean[j] += row[j] / static_cast<double>(n);
  std::vector<std::vector<double>> c(d, std::vector<double>(d, 0.0));
  for (const auto& row : x)
    for (size_t i = 0; i < d; ++i)
      for (size_t j = 0; j < d; ++j) c[i][j] += (row[i] - mean[i]) * (row[j] - mean[j]) / static_cast<double>(n - 1);
  return c;
}

namespace {
double dist(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}
}  // namespace

std::vector<double> core_distances(const std::vector<std::vector<double>>& x, int k) {
  std::vector<double> out;
  for (const auto& p : x) {
    std::vector<double> d;
    for (const auto& q : x) d.push_back(dist(p, q));
    std::sort(d.begin(), d.end());
    out.push_back(d[static_cast<size_t>(std::min<int>(k, static_cast<int>(d.size())) - 1)]);
  }
  return out;
}

double mst_weight(const std::vector<std::vector<double>>& x, const std::vector<double>& core) {
  struct E {
    double w;
    size_t a, b;
  };
  std::vector<E> edges;
  for (size_t i = 0; i < x.size(); ++i)
    for (size_t j = i + 1; j < x.size(); ++j)
      edges.push_back({std::max({core[i], core[j], dist(x[i], x[j])}), i, j});
  std::sort(edges.begin(), edges.end(), [](const E& l, const E& r) { return l.w < r.w; });
  std::vector<size_t> parent(x.size());
  std::iota(parent.begin(), parent.end(), 0);
  std::function<size_t(size_t)> find = [&](size_t i) { return parent[i] == i ? i : parent[i] = find(parent[i]); };
  double total = 0.0;
  for (const auto& e : edges) {
    const size_t ra = find(e.a), rb = find(e.b);
    if (ra == rb) continue;
    parent[ra] = rb;
    total += e.w;
  }
  return total;
}

Metrics brute_metrics(const std::vector<std::string>& gold, const std::vector<std::string>& pred) {
  std::set<std::string> names(gold.begin(), gold.end());
  names.insert(pred.begin(), pred.end());
  const std::vector<std::string> classes(names.begin(), names.end());
  const size_t C = classes.size();
  const auto index = [&](const std::string& s) {
    return static_cast<size_t>(std::find(classes.begin(), classes.end(), s) - classes.begin());
  };
  std::vector<std::vector<double>> m(C, std::vector<double>(C, 0.0));
  for (size_t i = 0; i < gold.size(); ++i) m[index(gold[i])][index(pred[i])] += 1.0;
  Metrics out;
  const double n = static_cast<double>(gold.size());
  for (size_t c = 0; c < C; ++c) out.accuracy += m[c][c] / n;
  for (size_t c = 0; c < C; ++c) {
    double row = 0.0, col = 0.0;
    for (size_t k = 0; k < C; ++k) {
      row += m[c][k];
      col += m[k][c];
    }
    const double p = col > 0 ? m[c][c] / col : 0.0;
    const double r = row > 0 ? m[c][c] / row : 0.0;
    const double f = p + r > 0 ? 2 * p * r / (p + r) : 0.0;
    out.wp += row / n * p;
    out.wr += row / n * r;
    out.wf1 += row / n * f;
  }
  return out;
}

double purity(const std::vector<int>& labels, const std::vector<int>& family) {
  std::map<int, std::map<int, int>> counts;
  int total = 0;
  for (size_t i = 0; i < labels.size(); ++i) {
    if (family[i] < 0) continue;
    ++counts[labels[i]][family[i]];
    ++total;
  }
  int good = 0;
  for (const auto& [label, fam] : counts) {
    if (label < 0) continue;
    int best = 0;
    for (const auto& [f, n] : fam) best = std::max(best, n);
    good += best;
  }
  return static_cast<double>(good) / static_cast<double>(total);
}

bool same_partition(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) return false;
  std::map<int, int> ab, ba;
  for (size_t i = 0; i < a.size(); ++i) {
    if ((a[i] < 0) != (b[i] < 0)) return false;
    if (a[i] < 0) continue;
    if (auto [it, fresh] = ab.emplace(a[i], b[i]); !fresh && it->second != b[i]) return false;
    if (auto [it, fresh] = ba.emplace(b[i], a[i]); !fresh && it->second != a[i]) return false;
  }
  return true;
}

}  // namespace oracle

namespace fixtures {

mailtopics::ModelConfig blob_config() {
  mailtopics::ModelConfig cfg;
  cfg.min_topic_size = 50;
  cfg.min_df = 20;
  cfg.seed = 42;
  return cfg;
}

const Blob& blob() {
  static const Blob b = [] {
    auto corpus = synth::blob_corpus(3, 400, 7, 60);
    mailtopics::ReferenceProvider provider;
    Blob out;
    out.model = mailtopics::topicmodel::fit(corpus.docs, blob_config(), provider);
    out.docs = std::move(corpus.docs);
    out.family = std::move(corpus.family);
    return out;
  }();
  return b;
}

}  // namespace fixtures
