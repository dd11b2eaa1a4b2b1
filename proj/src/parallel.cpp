#include "mhne/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace mhne {

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("HE_THREADS")) {
    try {
      int n = std::stoi(env);
      if (n > 0) return n;
    } catch (...) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void for_each_chunk_ordered(std::size_t chunks, int threads,
                            const std::function<void(std::size_t, int)>& compute,
                            const std::function<void(std::size_t, int)>& commit) {
  const int workers = static_cast<int>(std::min<std::size_t>(std::max(threads, 1), chunks));
  if (workers <= 1) {
    for (std::size_t c = 0; c < chunks; ++c) {
      compute(c, 0);
      commit(c, 0);
    }
    return;
  }

  std::atomic<std::size_t> next_chunk{0};
  std::size_t next_commit = 0;
  bool failed = false;
  std::exception_ptr error;
  std::mutex mu;
  std::condition_variable turn;

  auto run = [&](int worker) {
    for (;;) {
      const std::size_t c = next_chunk.fetch_add(1);
      if (c >= chunks) return;
      try {
        compute(c, worker);
        std::unique_lock lock(mu);
        turn.wait(lock, [&] { return failed || next_commit == c; });
        if (failed) return;
        commit(c, worker);
        ++next_commit;
        turn.notify_all();
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failed) {
          failed = true;
          error = std::current_exception();
        }
        turn.notify_all();
        return;
      }
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) pool.emplace_back(run, w);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace mhne
