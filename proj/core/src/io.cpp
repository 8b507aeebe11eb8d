#include "mocha/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "mocha/error.hpp"

namespace mocha {

using nlohmann::json;

namespace {

std::ifstream open_in(const std::filesystem::path& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  return out;
}

[[noreturn]] void parse_fail(std::size_t line, const std::string& what) {
  throw Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": " + what);
}

bool blank(const std::string& line) {
  return line.find_first_not_of(" \t\r") == std::string::npos;
}

json matrix_json(const Eigen::MatrixXd& M) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < M.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

// ---------------------------------------------------------------------------
// corpus

std::vector<EventSequence> read_corpus(std::istream& in) {
  std::vector<EventSequence> corpus;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (blank(line)) continue;
    EventSequence seq;
    try {
      const json j = json::parse(line);
      seq.id = j.at("seq_id").get<std::string>();
      seq.horizon = j.at("T").get<double>();
      for (const auto& e : j.at("events")) {
        seq.events.push_back({e.at("t").get<double>(), e.at("k").get<int>()});
      }
    } catch (const json::exception& ex) {
      parse_fail(lineno, ex.what());
    }
    seq.allow_empty = true;
    int K = 1;
    for (const auto& e : seq.events) K = std::max(K, e.k + 1);
    try {
      validate_sequence(seq, K);
    } catch (const Error& ex) {
      throw Error(ex.code(), "line " + std::to_string(lineno) + ": " + ex.what());
    }
    seq.allow_empty = false;
    corpus.push_back(std::move(seq));
  }
  return corpus;
}

std::vector<EventSequence> read_corpus(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_corpus(in);
}

void write_corpus(std::ostream& out, std::span<const EventSequence> corpus) {
  for (const auto& seq : corpus) {
    json events = json::array();
    for (const auto& e : seq.events) events.push_back({{"t", e.t}, {"k", e.k}});
    out << json{{"seq_id", seq.id}, {"T", seq.horizon}, {"events", std::move(events)}}.dump()
        << '\n';
  }
}

void write_corpus(const std::filesystem::path& path, std::span<const EventSequence> corpus) {
  auto out = open_out(path);
  write_corpus(out, corpus);
}

// ---------------------------------------------------------------------------
// checkpoint

namespace {

constexpr char kMagic[8] = {'M', 'O', 'C', 'H', 'A', 'C', 'K', 'P'};

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* c = static_cast<const char*>(p);
    buf_.insert(buf_.end(), c, c + n);
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  [[nodiscard]] const std::vector<char>& buffer() const noexcept { return buf_; }

 private:
  std::vector<char> buf_;
};

class Reader {
 public:
  explicit Reader(std::span<const char> data) : data_(data) {}
  void need(std::size_t n) const {
    if (pos_ + n > data_.size()) throw Error(ErrorCode::CorruptCheckpoint, "checkpoint truncated");
  }
  void bytes(void* p, std::size_t n) {
    need(n);
    std::memcpy(p, data_.data() + pos_, n);
    pos_ += n;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    }
    pos_ += 8;
    return v;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    }
    pos_ += 4;
    return v;
  }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(data_[pos_++]);
  }
  [[nodiscard]] std::size_t position() const noexcept { return pos_; }

 private:
  std::span<const char> data_;
  std::size_t pos_{0};
};

std::uint64_t fnv1a(std::span<const char> data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : data) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

void save_checkpoint(std::ostream& out, const ModelParameters& params, const HyperParameters& hp) {
  hp.validate();
  check_shapes(params, hp);
  Writer w;
  w.bytes(kMagic, sizeof kMagic);
  w.u32(kCheckpointVersion);
  w.i32(hp.K);
  w.i32(hp.d);
  w.i32(hp.d_attn);
  w.i32(hp.hidden);
  w.i32(hp.L);
  w.f64(hp.beta);
  w.f64(hp.theta);
  w.f64(hp.gamma_acyclic);
  w.f64(hp.gamma_sparse);
  w.i32(hp.substeps);
  w.f64(hp.epsilon);
  w.i32(static_cast<std::int32_t>(hp.variant));
  w.i32(hp.max_history);
  w.u8(hp.frozen_weights ? 1 : 0);
  w.u8(hp.dag_mask ? 1 : 0);
  w.f64(hp.time_scale);

  std::uint32_t count = 0;
  visit_tensors(params, [&](std::string_view, Eigen::Index, Eigen::Index, auto) { ++count; });
  w.u32(count);
  visit_tensors(params, [&](std::string_view name, Eigen::Index rows, Eigen::Index cols,
                            std::span<const double> data) {
    w.u32(static_cast<std::uint32_t>(name.size()));
    w.bytes(name.data(), name.size());
    w.u32(static_cast<std::uint32_t>(rows));
    w.u32(static_cast<std::uint32_t>(cols));
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) w.f64(data[static_cast<std::size_t>(c * rows + r)]);
    }
  });
  const std::uint64_t checksum = fnv1a(w.buffer());
  w.u64(checksum);
  out.write(w.buffer().data(), static_cast<std::streamsize>(w.buffer().size()));
  if (!out) throw Error(ErrorCode::IoError, "checkpoint write failed");
}

void save_checkpoint(const std::filesystem::path& path, const ModelParameters& params,
                     const HyperParameters& hp) {
  auto out = open_out(path, std::ios::out | std::ios::binary);
  save_checkpoint(out, params, hp);
}

Checkpoint load_checkpoint(std::istream& in) {
  const std::vector<char> data((std::istreambuf_iterator<char>(in)),
                               std::istreambuf_iterator<char>());
  Reader r(data);
  char magic[sizeof kMagic];
  r.bytes(magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
    throw Error(ErrorCode::CorruptCheckpoint, "not a checkpoint file");
  }
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw Error(ErrorCode::VersionMismatch, "checkpoint version " + std::to_string(version) +
                                                ", expected " +
                                                std::to_string(kCheckpointVersion));
  }
  if (data.size() < 8) throw Error(ErrorCode::CorruptCheckpoint, "checkpoint truncated");
  const std::span<const char> body(data.data(), data.size() - 8);
  Reader tail(std::span<const char>(data.data() + body.size(), 8));
  if (fnv1a(body) != tail.u64()) {
    throw Error(ErrorCode::CorruptCheckpoint, "checkpoint checksum mismatch");
  }
  Reader b(body);
  b.bytes(magic, sizeof magic);
  (void)b.u32();

  Checkpoint ck;
  HyperParameters& hp = ck.hp;
  hp.K = b.i32();
  hp.d = b.i32();
  hp.d_attn = b.i32();
  hp.hidden = b.i32();
  hp.L = b.i32();
  hp.beta = b.f64();
  hp.theta = b.f64();
  hp.gamma_acyclic = b.f64();
  hp.gamma_sparse = b.f64();
  hp.substeps = b.i32();
  hp.epsilon = b.f64();
  const std::int32_t variant = b.i32();
  if (variant < 0 || variant > static_cast<std::int32_t>(Variant::FullDynamic)) {
    throw Error(ErrorCode::CorruptCheckpoint, "unknown variant code");
  }
  hp.variant = static_cast<Variant>(variant);
  hp.max_history = b.i32();
  hp.frozen_weights = b.u8() != 0;
  hp.dag_mask = b.u8() != 0;
  hp.time_scale = b.f64();
  try {
    hp.validate();
  } catch (const Error& ex) {
    throw Error(ErrorCode::CorruptCheckpoint, ex.what());
  }

  ck.params = zero_parameters(hp);
  const std::uint32_t count = b.u32();
  std::uint32_t expected = 0;
  visit_tensors(ck.params, [&](std::string_view, Eigen::Index, Eigen::Index, auto) { ++expected; });
  if (count != expected) throw Error(ErrorCode::CorruptCheckpoint, "unexpected tensor count");
  visit_tensors(ck.params, [&](std::string_view name, Eigen::Index rows, Eigen::Index cols,
                               std::span<double> data) {
    const std::uint32_t len = b.u32();
    std::string stored(len, '\0');
    b.bytes(stored.data(), len);
    if (stored != name) throw Error(ErrorCode::CorruptCheckpoint, "unexpected tensor " + stored);
    if (b.u32() != rows || b.u32() != cols) {
      throw Error(ErrorCode::CorruptCheckpoint, "tensor " + stored + " has the wrong shape");
    }
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) data[static_cast<std::size_t>(c * rows + r)] = b.f64();
    }
  });
  if (b.position() != body.size()) {
    throw Error(ErrorCode::CorruptCheckpoint, "trailing bytes after tensors");
  }
  return ck;
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  auto in = open_in(path, std::ios::in | std::ios::binary);
  return load_checkpoint(in);
}

// ---------------------------------------------------------------------------
// graphs

GraphSnapshot make_snapshot(const StructuralWeights& Wt, const HyperParameters& hp) {
  return {Wt, threshold_graph(Wt, hp), {}};
}

void write_graph_snapshots(std::ostream& out, std::span<const GraphSnapshot> snapshots,
                           const HyperParameters& hp) {
  for (const auto& s : snapshots) {
    json A = json::array();
    for (Eigen::Index r = 0; r < s.graph.A.rows(); ++r) {
      json row = json::array();
      for (Eigen::Index c = 0; c < s.graph.A.cols(); ++c) row.push_back(int{s.graph.A(r, c)});
      A.push_back(std::move(row));
    }
    json record;
    if (!s.seq_id.empty()) record["seq_id"] = s.seq_id;
    record["t"] = s.weights.t;
    record["W"] = matrix_json(s.weights.W);
    record["A"] = std::move(A);
    record["is_dag"] = s.graph.is_dag;
    record["beta"] = hp.beta;
    record["theta"] = hp.theta;
    out << record.dump() << '\n';
  }
}

void write_dot(std::ostream& out, const GraphSnapshot& snapshot, const HyperParameters& hp) {
  std::ostringstream label;
  label << std::setprecision(17) << snapshot.weights.t;
  out << "digraph G {\n  label=\"t=" << label.str() << "\";\n";
  const auto K = snapshot.graph.A.rows();
  for (Eigen::Index v = 0; v < K; ++v) out << "  " << v << ";\n";
  for (Eigen::Index u = 0; u < K; ++u) {
    for (Eigen::Index v = 0; v < K; ++v) {
      if (snapshot.graph.A(u, v) == 0) continue;
      std::ostringstream act;
      act << std::fixed << std::setprecision(4) << edge_activation(snapshot.weights.W(u, v), hp.beta);
      out << "  " << u << " -> " << v << " [label=\"" << act.str() << "\"];\n";
    }
  }
  out << "}\n";
}

// ---------------------------------------------------------------------------
// logs and reports

void write_training_record(std::ostream& out, const EpochRecord& record) {
  out << json{{"epoch", record.epoch},
              {"split", record.split},
              {"nll", record.loss.nll},
              {"acyclic", record.loss.acyclic},
              {"sparse", record.loss.sparse},
              {"total", record.loss.total},
              {"wall_time", record.wall_time}}
             .dump()
      << '\n';
}

void write_training_log(std::ostream& out, std::span<const EpochRecord> log) {
  for (const auto& r : log) write_training_record(out, r);
}

void write_metrics(std::ostream& out, const Metrics& m) {
  out << json{{"nll_per_event", m.nll_per_event},
              {"nll_per_sequence", m.nll_per_sequence},
              {"rmse", m.rmse},
              {"accuracy", m.accuracy},
              {"events", m.events},
              {"sequences", m.sequences},
              {"predictions", m.predictions},
              {"truncated", m.truncated}}
             .dump(2)
      << '\n';
}

void write_path_matches(std::ostream& out, std::span<const PathMatch> matches) {
  for (const auto& m : matches) {
    out << json{{"label", m.label},
                {"occurrences", m.occurrences},
                {"matched", m.matched},
                {"rate", m.rate()}}
               .dump()
        << '\n';
  }
}

// ---------------------------------------------------------------------------
// planted generators and paths

PlantedGenerator read_planted(std::istream& in) {
  PlantedGenerator g;
  try {
    const json j = json::parse(in);
    g.K = j.at("K").get<int>();
    g.mu = j.at("mu").get<std::vector<double>>();
    g.decay_rate = j.value("decay_rate", 1.0);
    for (const auto& e : j.value("edges", json::array())) {
      g.edges.push_back({e.at("from").get<int>(), e.at("to").get<int>(), e.at("weight").get<double>()});
    }
    for (const auto& p : j.value("paths", json::array())) {
      g.paths.push_back({p.at("types").get<std::vector<int>>(), p.value("label", std::string{}),
                         p.value("weight", 0.0)});
    }
  } catch (const json::exception& ex) {
    throw Error(ErrorCode::ParseError, ex.what());
  }
  g.validate();
  return g;
}

PlantedGenerator read_planted(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_planted(in);
}

void write_planted(std::ostream& out, const PlantedGenerator& g) {
  json edges = json::array();
  for (const auto& e : g.edges) edges.push_back({{"from", e.from}, {"to", e.to}, {"weight", e.weight}});
  json paths = json::array();
  for (const auto& p : g.paths) {
    paths.push_back({{"types", p.types}, {"label", p.label}, {"weight", p.weight}});
  }
  out << json{{"K", g.K},
              {"mu", g.mu},
              {"decay_rate", g.decay_rate},
              {"edges", std::move(edges)},
              {"paths", std::move(paths)}}
             .dump(2)
      << '\n';
}

std::vector<GroundTruthPath> read_paths(std::istream& in) {
  std::vector<GroundTruthPath> paths;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (blank(line)) continue;
    try {
      const json j = json::parse(line);
      paths.push_back({j.at("types").get<std::vector<int>>(), j.value("label", std::string{})});
    } catch (const json::exception& ex) {
      parse_fail(lineno, ex.what());
    }
  }
  return paths;
}

std::vector<GroundTruthPath> read_paths(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_paths(in);
}

void write_paths(std::ostream& out, std::span<const GroundTruthPath> paths) {
  for (const auto& p : paths) out << json{{"label", p.label}, {"types", p.types}}.dump() << '\n';
}

void write_edges(std::ostream& out, std::span<const PlantedEdge> edges) {
  for (const auto& e : edges) {
    out << json{{"from", e.from}, {"to", e.to}, {"weight", e.weight}}.dump() << '\n';
  }
}

}  // namespace mocha
