#include "ibplab/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>

namespace ibplab {

StatsBlock reduce_deterministic(std::vector<TaggedBlock> partials, std::size_t slots) {
  std::sort(partials.begin(), partials.end(),
            [](const TaggedBlock& a, const TaggedBlock& b) { return a.range.begin < b.range.begin; });
  std::uint64_t watermark = 0;
  bool first = true;
  StatsBlock out = make_stats_block(slots);
  for (const TaggedBlock& p : partials) {
    if (p.range.end < p.range.begin) throw ConfigError("reduce: invalid range");
    if (!first && p.range.begin < watermark) throw ConfigError("reduce: overlapping ranges");
    watermark = p.range.end;
    first = false;
    merge_blocks(out, p.stats);
  }
  return out;
}

int resolve_worker_count(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("IBPLAB_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

StatsBlock mc_run(std::uint64_t n_paths, std::size_t slots,
                  const std::function<void(std::uint64_t, StatsBlock&)>& work, int workers,
                  std::uint64_t chunk_size) {
  if (chunk_size == 0) throw ConfigError("mc_run: chunk size must be positive");
  const std::uint64_t n_chunks = (n_paths + chunk_size - 1) / chunk_size;
  std::vector<TaggedBlock> chunks(n_chunks);

  const int n_workers = std::max(1, std::min<int>(resolve_worker_count(workers),
                                                  static_cast<int>(std::max<std::uint64_t>(n_chunks, 1))));
  std::atomic<std::uint64_t> next{0};
  std::mutex err_mutex;
  std::exception_ptr error;

  auto body = [&]() {
    for (;;) {
      const std::uint64_t c = next.fetch_add(1);
      if (c >= n_chunks) return;
      TaggedBlock& blk = chunks[c];
      blk.range.begin = c * chunk_size;
      blk.range.end = std::min(n_paths, blk.range.begin + chunk_size);
      blk.stats = make_stats_block(slots);
      try {
        for (std::uint64_t i = blk.range.begin; i < blk.range.end; ++i) work(i, blk.stats);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!error) error = std::current_exception();
        next.store(n_chunks);
        return;
      }
    }
  };

  if (n_workers == 1) {
    body();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_workers);
    for (int w = 0; w < n_workers; ++w) pool.emplace_back(body);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);
  return reduce_deterministic(std::move(chunks), slots);
}

}  // namespace ibplab
