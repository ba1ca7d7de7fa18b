#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "finder/config.hpp"
#include "finder/corpus.hpp"

namespace finder::cli {

/// Commands read and write through injected streams so tests can drive the
/// interactive oracle and capture output.
struct CommandStreams {
    std::istream& in;
    std::ostream& out;
    std::ostream& err;
};

enum class ExtractMode { normal, record };

/// Reads the corpus store (manifest + per-document files) under the
/// configured output directory and derives chunks and sentences.
corpus::Corpus load_corpus(const RunConfig& config);

/// Ingests files or directory trees into the corpus store. Per-file failures
/// warn and continue; the exit is nonzero only when nothing could be
/// ingested at all.
int cmd_ingest(const RunConfig& config, const std::vector<std::string>& paths,
               CommandStreams& streams);

/// (Re)builds the vector index over all corpus chunks and saves it.
int cmd_index(const RunConfig& config, CommandStreams& streams);

/// Runs the full extraction pipeline and writes per-document records plus
/// the run manifest. In record mode every completion is captured to a replay
/// cache for offline reruns.
int cmd_extract(const RunConfig& config, CommandStreams& streams,
                ExtractMode mode, bool verbose);

/// Scores a predictions file against gold annotations, prints the metrics
/// table and writes the JSON report.
int cmd_eval(const RunConfig& config, const std::string& predictions_path,
             const std::string& gold_path, CommandStreams& streams);

/// Maps typed errors to the documented exit codes: 2 config/schema,
/// 3 gateway, 4 unrecoverable parse failure, 1 any other error.
int guarded(std::ostream& err, const std::function<int()>& body);

}  // namespace finder::cli
