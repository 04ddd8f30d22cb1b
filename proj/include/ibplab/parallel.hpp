#pragma once

#include <cstdint>
#include <functional>

#include "ibplab/stats.hpp"

namespace ibplab {

/// Half-open range of path indices.
struct PathRange {
  std::uint64_t begin = 0;
  std::uint64_t end = 0;
};

/// Ordered per-worker partial result tagged with the paths it covers.
struct TaggedBlock {
  PathRange range;
  StatsBlock stats;
};

/// Merges partial blocks in path-index order with compensated summation.
/// Ranges must be disjoint; gaps are allowed. The result is a pure function
/// of the (range, stats) multiset, so it is independent of which worker
/// produced which block.
StatsBlock reduce_deterministic(std::vector<TaggedBlock> partials, std::size_t slots);

/// Worker count resolution: explicit request, else the IBPLAB_THREADS
/// environment variable, else hardware concurrency.
int resolve_worker_count(int requested = 0);

/// Runs `work(path_index, block)` for every path in [0, n_paths), accumulating
/// into per-chunk StatsBlocks of fixed `chunk_size`, and reduces the chunks in
/// index order. The chunk layout does not depend on the worker count, so the
/// reduced statistics are bitwise identical for any number of workers.
StatsBlock mc_run(std::uint64_t n_paths, std::size_t slots,
                  const std::function<void(std::uint64_t, StatsBlock&)>& work, int workers = 0,
                  std::uint64_t chunk_size = 1024);

}  // namespace ibplab
