#include "ldlab/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace ldlab {
namespace {

std::atomic<int> g_threads{1};
constexpr std::size_t kMinChunk = 4096;

}  // namespace

void set_num_threads(int n) {
  if (n <= 0) n = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  g_threads.store(n);
}

int num_threads() { return g_threads.load(); }

int num_chunks(std::size_t n) {
  const auto t = static_cast<std::size_t>(num_threads());
  if (t <= 1 || n < 2 * kMinChunk) return 1;
  return static_cast<int>(std::min(t, n / kMinChunk));
}

void parallel_chunks(std::size_t n, const std::function<void(std::size_t, std::size_t, int)>& body) {
  const int chunks = num_chunks(n);
  if (chunks == 1) {
    body(0, n, 0);
    return;
  }
  std::vector<std::thread> workers;
  std::exception_ptr failure;
  std::mutex failure_mutex;
  workers.reserve(static_cast<std::size_t>(chunks));
  for (int c = 0; c < chunks; ++c) {
    const std::size_t begin = n * static_cast<std::size_t>(c) / static_cast<std::size_t>(chunks);
    const std::size_t end = n * static_cast<std::size_t>(c + 1) / static_cast<std::size_t>(chunks);
    workers.emplace_back([&, begin, end, c] {
      try {
        body(begin, end, c);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& w : workers) w.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace ldlab
