#pragma once

#include <iosfwd>
#include <vector>

#include "rtree/config.hpp"
#include "rtree/records.hpp"

namespace rtree {

// Runs one experiment and returns its rows: per-replicate rows ordered by replicate, then
// summary rows (replicate empty). Replicate r draws from Stream::for_replicate(seed, r) or
// builds its tree with derive_stream_seed(seed, r). `build` also exports the tree to
// config.out when set.
std::vector<ResultRecord> execute(const ExperimentConfig& config);

// execute() followed by writing the rows: to config.out (atomically) for every command but
// build, whose rows go to config.stats; `fallback` when no path is given.
void run(const ExperimentConfig& config, std::ostream& fallback);

void write_records(const std::vector<ResultRecord>& records, OutputFormat format, std::ostream& out);

}  // namespace rtree
