#include "mailtopics/artifact.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>

#include "mailtopics/config.hpp"
#include "mailtopics/error.hpp"
#include "mailtopics/phrases.hpp"

namespace mailtopics::artifact {

namespace {

class Writer {
 public:
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(std::string_view s) {
    u64(s.size());
    buf_.append(s);
  }
  void raw(std::string_view s) { buf_.append(s); }
  void f64s(const double* data, std::size_t n) {
    u64(n);
    for (std::size_t i = 0; i < n; ++i) f64(data[i]);
  }
  void matrix(const RowMatrix& m) {
    i64(m.rows());
    i64(m.cols());
    for (Eigen::Index i = 0; i < m.size(); ++i) f64(m.data()[i]);
  }
  void csr(const CsrMatrix& m) {
    i64(m.rows);
    i64(m.cols);
    u64(m.row_ptr.size());
    for (auto v : m.row_ptr) i64(v);
    u64(m.col_idx.size());
    for (auto v : m.col_idx) u32(static_cast<std::uint32_t>(v));
    f64s(m.values.data(), m.values.size());
  }
  void ints(const std::vector<int>& v) {
    u64(v.size());
    for (int x : v) u32(static_cast<std::uint32_t>(x));
  }
  void strs(const std::vector<std::string>& v) {
    u64(v.size());
    for (const auto& s : v) str(s);
  }
  void section(const Writer& w) { str(w.buf_); }
  const std::string& bytes() const { return buf_; }

 private:
  std::string buf_;
};

class Reader {
 public:
  explicit Reader(std::string_view data) : data_(data) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    pos_ += 8;
    return v;
  }
  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string_view str() {
    const auto n = count(1);
    std::string_view s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::vector<double> f64s() {
    const auto n = count(8);
    std::vector<double> v(n);
    for (auto& x : v) x = f64();
    return v;
  }
  RowMatrix matrix() {
    const auto rows = i64();
    const auto cols = i64();
    if (rows < 0 || cols < 0 || (cols > 0 && static_cast<std::uint64_t>(rows) > remaining() / 8 / static_cast<std::uint64_t>(cols)))
      throw Error("corrupt_artifact", "matrix shape out of range");
    RowMatrix m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = f64();
    return m;
  }
  CsrMatrix csr() {
    CsrMatrix m;
    m.rows = i64();
    m.cols = i64();
    m.row_ptr.resize(count(8));
    for (auto& v : m.row_ptr) v = i64();
    m.col_idx.resize(count(4));
    for (auto& v : m.col_idx) v = static_cast<std::int32_t>(u32());
    m.values = f64s();
    if (static_cast<std::int64_t>(m.row_ptr.size()) != m.rows + 1 || m.col_idx.size() != m.values.size() ||
        m.row_ptr.back() != static_cast<std::int64_t>(m.values.size()))
      throw Error("corrupt_artifact", "inconsistent sparse matrix");
    return m;
  }
  std::vector<int> ints() {
    std::vector<int> v(count(4));
    for (auto& x : v) x = static_cast<int>(u32());
    return v;
  }
  std::vector<std::string> strs() {
    std::vector<std::string> v(count(8));
    for (auto& s : v) s = std::string(str());
    return v;
  }
  Reader section() { return Reader(str()); }
  bool done() const { return pos_ == data_.size(); }

 private:
  std::uint64_t remaining() const { return data_.size() - pos_; }
  void need(std::uint64_t n) const {
    if (remaining() < n) throw Error("corrupt_artifact", "unexpected end of data");
  }
  std::size_t count(std::uint64_t unit) {
    const auto n = u64();
    if (n > remaining() / unit) throw Error("corrupt_artifact", "length field out of range");
    return static_cast<std::size_t>(n);
  }

  std::string_view data_;
  std::size_t pos_ = 0;
};

std::uint32_t crc32_of(std::string_view bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks.
  std::size_t off = 0;
  while (off < bytes.size()) {
    const auto n = static_cast<uInt>(std::min<std::size_t>(bytes.size() - off, 1u << 30));
    crc = crc32(crc, reinterpret_cast<const Bytef*>(bytes.data() + off), n);
    off += n;
  }
  return static_cast<std::uint32_t>(crc);
}

nlohmann::json maps_json(const FittedTopicModel& m) {
  nlohmann::json j;
  auto& custom = j["custom_labels"] = nlohmann::json::object();
  for (const auto& [t, l] : m.custom_labels) custom[std::to_string(t)] = l;
  auto& derived = j["derived_map"] = nlohmann::json::object();
  for (const auto& [t, l] : m.derived_map) derived[std::to_string(t)] = l;
  auto& reps = j["representative_docs"] = nlohmann::json::object();
  for (const auto& [t, ids] : m.representative_docs) reps[std::to_string(t)] = ids;
  auto& kw = j["representations"] = nlohmann::json::array();
  for (const auto& r : m.representations) {
    nlohmann::json terms = nlohmann::json::array();
    for (const auto& [term, w] : r.keywords) terms.push_back({{"term", term}, {"weight_bits", std::bit_cast<std::uint64_t>(w)}});
    kw.push_back({{"topic_id", r.topic_id}, {"size", r.size}, {"keywords", terms}});
  }
  return j;
}

}  // namespace

std::string serialize(const FittedTopicModel& m) {
  Writer out;
  out.raw(std::string_view(kMagic, 4));
  out.u32(static_cast<std::uint32_t>(m.version));

  Writer manifest;
  manifest.str(nlohmann::json{{"config", to_json(m.config)},
                              {"num_topics", m.num_topics()},
                              {"num_documents", m.corpus.ids.size()}}
                   .dump());
  out.section(manifest);

  Writer reducer;
  reducer.str(m.reducer.kind);
  reducer.u64(m.reducer.seed);
  reducer.f64s(m.reducer.mean.data(), static_cast<std::size_t>(m.reducer.mean.size()));
  reducer.matrix(m.reducer.components);
  reducer.f64s(m.reducer.explained_variance.data(), static_cast<std::size_t>(m.reducer.explained_variance.size()));
  out.section(reducer);

  Writer clusters;
  clusters.u32(static_cast<std::uint32_t>(m.clusters.K));
  clusters.ints(m.clusters.labels);
  clusters.ints(m.clusters.sizes);
  clusters.matrix(m.clusters.centroids);
  out.section(clusters);

  Writer ctfidf;
  ctfidf.f64(m.ctfidf.avg_words_per_class);
  ctfidf.f64s(m.ctfidf.corpus_tf.data(), m.ctfidf.corpus_tf.size());
  ctfidf.ints(m.ctfidf.class_sizes);
  ctfidf.csr(m.ctfidf.class_tf);
  ctfidf.csr(m.ctfidf.weights);
  out.section(ctfidf);

  Writer vocab;
  vocab.strs(m.ctfidf.vocabulary.terms);
  vocab.ints(m.ctfidf.vocabulary.doc_freq);
  vocab.u32(static_cast<std::uint32_t>(m.ctfidf.vocabulary.min_df));
  vocab.strs(m.ctfidf.vocabulary.stopwords);
  out.section(vocab);

  Writer maps;
  maps.str(maps_json(m).dump());
  out.section(maps);

  Writer corpus;
  corpus.strs(m.corpus.ids);
  corpus.strs(m.corpus.texts);
  corpus.matrix(m.corpus.reduced);
  out.section(corpus);

  std::string bytes = out.bytes();
  const std::uint32_t crc = crc32_of(bytes);
  for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<char>((crc >> (8 * i)) & 0xFF));
  return bytes;
}

FittedTopicModel deserialize(std::string_view bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw Error("bad_magic", "not a topic model artifact");
  if (bytes.size() < 12) throw Error("checksum_mismatch", "artifact is truncated");
  Reader header(bytes.substr(4, 4));
  const auto version = static_cast<int>(header.u32());
  if (version > FittedTopicModel::kFormatVersion || version < 1)
    throw Error("unsupported_version", "artifact version " + std::to_string(version) + " is not supported");
  const std::string_view body = bytes.substr(0, bytes.size() - 4);
  Reader trailer(bytes.substr(bytes.size() - 4));
  if (trailer.u32() != crc32_of(body)) throw Error("checksum_mismatch", "artifact checksum does not match");

  FittedTopicModel m;
  m.version = version;
  Reader in(body.substr(8));

  {
    Reader s = in.section();
    const auto manifest = nlohmann::json::parse(s.str(), nullptr, false);
    if (manifest.is_discarded()) throw Error("corrupt_artifact", "manifest is not JSON");
    m.config = model_config_from_json(manifest.at("config"));
  }
  {
    Reader s = in.section();
    m.reducer.kind = std::string(s.str());
    m.reducer.seed = s.u64();
    const auto mean = s.f64s();
    m.reducer.mean = Eigen::Map<const Vector>(mean.data(), static_cast<Eigen::Index>(mean.size()));
    m.reducer.components = s.matrix();
    const auto ev = s.f64s();
    m.reducer.explained_variance = Eigen::Map<const Vector>(ev.data(), static_cast<Eigen::Index>(ev.size()));
  }
  {
    Reader s = in.section();
    m.clusters.K = static_cast<int>(s.u32());
    m.clusters.labels = s.ints();
    m.clusters.sizes = s.ints();
    m.clusters.centroids = s.matrix();
  }
  {
    Reader s = in.section();
    m.ctfidf.avg_words_per_class = s.f64();
    m.ctfidf.corpus_tf = s.f64s();
    m.ctfidf.class_sizes = s.ints();
    m.ctfidf.class_tf = s.csr();
    m.ctfidf.weights = s.csr();
  }
  {
    Reader s = in.section();
    auto& v = m.ctfidf.vocabulary;
    v.terms = s.strs();
    v.doc_freq = s.ints();
    v.min_df = static_cast<int>(s.u32());
    v.stopwords = s.strs();
    v.rebuild_index();
  }
  {
    Reader s = in.section();
    const auto j = nlohmann::json::parse(s.str(), nullptr, false);
    if (j.is_discarded()) throw Error("corrupt_artifact", "label maps are not JSON");
    for (const auto& [k, v] : j.at("custom_labels").items()) m.custom_labels[std::stoi(k)] = v.get<std::string>();
    for (const auto& [k, v] : j.at("derived_map").items()) m.derived_map[std::stoi(k)] = v.get<std::string>();
    for (const auto& [k, v] : j.at("representative_docs").items())
      m.representative_docs[std::stoi(k)] = v.get<std::vector<std::string>>();
    for (const auto& r : j.at("representations")) {
      TopicRepresentation rep;
      rep.topic_id = r.at("topic_id").get<int>();
      rep.size = r.at("size").get<int>();
      for (const auto& kw : r.at("keywords"))
        rep.keywords.emplace_back(kw.at("term").get<std::string>(),
                                  std::bit_cast<double>(kw.at("weight_bits").get<std::uint64_t>()));
      m.representations.push_back(std::move(rep));
    }
  }
  {
    Reader s = in.section();
    m.corpus.ids = s.strs();
    m.corpus.texts = s.strs();
    m.corpus.reduced = s.matrix();
  }
  if (!in.done()) throw Error("corrupt_artifact", "trailing bytes after last section");
  if (m.clusters.labels.size() != m.corpus.ids.size() || m.clusters.centroids.rows() != m.clusters.K ||
      m.ctfidf.weights.rows != m.clusters.K)
    throw Error("corrupt_artifact", "sections disagree on sizes");
  return m;
}

void save(const FittedTopicModel& model, const std::filesystem::path& path) {
  const std::string bytes = serialize(model);
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("io_error", "cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw Error("io_error", "short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

FittedTopicModel load(const std::filesystem::path& path) { return deserialize(read_file(path)); }

}  // namespace mailtopics::artifact
