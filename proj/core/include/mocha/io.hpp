#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "mocha/evaluation.hpp"
#include "mocha/graph.hpp"
#include "mocha/hyperparameters.hpp"
#include "mocha/optimizer.hpp"
#include "mocha/parameters.hpp"
#include "mocha/simulation.hpp"
#include "mocha/types.hpp"

namespace mocha {

inline constexpr std::uint32_t kCheckpointVersion = 1;

// Corpus: one JSON object per line, {"seq_id", "T", "events": [{"t", "k"}]}.
// Parsed sequences are checked for ordering and horizon but not against K.
[[nodiscard]] std::vector<EventSequence> read_corpus(std::istream& in);
[[nodiscard]] std::vector<EventSequence> read_corpus(const std::filesystem::path& path);
void write_corpus(std::ostream& out, std::span<const EventSequence> corpus);
void write_corpus(const std::filesystem::path& path, std::span<const EventSequence> corpus);

struct Checkpoint {
  ModelParameters params;
  HyperParameters hp;
};

/// Little-endian binary: magic, version, shape header, hyperparameters, named
/// row-major tensors and an FNV-1a checksum.
void save_checkpoint(std::ostream& out, const ModelParameters& params, const HyperParameters& hp);
void save_checkpoint(const std::filesystem::path& path, const ModelParameters& params,
                     const HyperParameters& hp);
/// Throws VersionMismatch or CorruptCheckpoint.
[[nodiscard]] Checkpoint load_checkpoint(std::istream& in);
[[nodiscard]] Checkpoint load_checkpoint(const std::filesystem::path& path);

struct GraphSnapshot {
  StructuralWeights weights;
  CausalGraph graph;
  std::string seq_id;  ///< written when non-empty
};

[[nodiscard]] GraphSnapshot make_snapshot(const StructuralWeights& Wt, const HyperParameters& hp);
/// One line per snapshot: {"seq_id"?, "t", "W", "A", "is_dag", "beta", "theta"}.
void write_graph_snapshots(std::ostream& out, std::span<const GraphSnapshot> snapshots,
                           const HyperParameters& hp);
/// Directed graph with one labelled edge per A[u, v] = 1.
void write_dot(std::ostream& out, const GraphSnapshot& snapshot, const HyperParameters& hp);

/// One line per record: {"epoch", "split", "nll", "acyclic", "sparse", "total", "wall_time"}.
void write_training_record(std::ostream& out, const EpochRecord& record);
void write_training_log(std::ostream& out, std::span<const EpochRecord> log);

/// {"K", "mu", "decay_rate", "edges": [{"from","to","weight"}], "paths": [{"types","label","weight"}]}
[[nodiscard]] PlantedGenerator read_planted(std::istream& in);
[[nodiscard]] PlantedGenerator read_planted(const std::filesystem::path& path);
void write_planted(std::ostream& out, const PlantedGenerator& generator);

/// One path per line: {"label", "types"}.
[[nodiscard]] std::vector<GroundTruthPath> read_paths(std::istream& in);
[[nodiscard]] std::vector<GroundTruthPath> read_paths(const std::filesystem::path& path);
void write_paths(std::ostream& out, std::span<const GroundTruthPath> paths);
/// One edge per line: {"from", "to", "weight"}.
void write_edges(std::ostream& out, std::span<const PlantedEdge> edges);

void write_metrics(std::ostream& out, const Metrics& metrics);
void write_path_matches(std::ostream& out, std::span<const PathMatch> matches);

}  // namespace mocha
