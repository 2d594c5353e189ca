#include "majorantlab/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace majorantlab {

namespace {
std::atomic<int> g_workers{1};
}

int workers() { return g_workers.load(); }
void set_workers(int n) { g_workers.store(std::max(1, n)); }

void parallel_chunks(std::size_t chunks, const std::function<void(std::size_t)>& fn) {
  const auto nthreads = std::min<std::size_t>(static_cast<std::size_t>(workers()), chunks);
  if (nthreads <= 1) {
    for (std::size_t i = 0; i < chunks; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::size_t failed_chunk = chunks;
  std::exception_ptr failure;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= chunks) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (i < failed_chunk) {
          failed_chunk = i;
          failure = std::current_exception();
        }
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(nthreads);
  for (std::size_t t = 0; t < nthreads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace majorantlab
