#include "epsdf/parallel.hpp"

#include <cstdlib>
#include <exception>
#include <thread>
#include <vector>

namespace epsdf {

int thread_count() {
  static const int count = [] {
    if (const char* env = std::getenv("EPSDF_THREADS")) {
      const int n = std::atoi(env);
      if (n >= 1) return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : int(hw);
  }();
  return count;
}

int plan_workers(Index chunks) {
  return int(std::min<Index>(thread_count(), std::max<Index>(chunks, 1)));
}

void for_chunks(Index n, Index chunk_size,
                const std::function<void(Index, Index, Index, int)>& fn) {
  const Index chunks = num_chunks(n, chunk_size);
  if (chunks == 0) return;
  const int workers = plan_workers(chunks);

  std::vector<std::exception_ptr> errors(workers);
  auto work = [&](int w) {
    try {
      for (Index c = w; c < chunks; c += workers)
        fn(c * chunk_size, std::min(n, (c + 1) * chunk_size), c, w);
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };

  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (int w = 1; w < workers; ++w) pool.emplace_back(work, w);
    work(0);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace epsdf
