#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace dpm {

// Splits [0, count) into `workers` contiguous chunks and runs
// fn(begin, end) for each on its own thread. The first exception thrown by
// any chunk is rethrown after all threads join.
template <typename Fn>
void parallel_for(std::ptrdiff_t count, unsigned workers, Fn&& fn) {
  if (workers <= 1 || count < 2) {
    fn(std::ptrdiff_t{0}, count);
    return;
  }
  const auto chunks = static_cast<std::ptrdiff_t>(
      std::min<std::ptrdiff_t>(workers, count));
  std::vector<std::thread> threads;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(chunks));
  threads.reserve(static_cast<std::size_t>(chunks));
  for (std::ptrdiff_t c = 0; c < chunks; ++c) {
    const std::ptrdiff_t begin = count * c / chunks;
    const std::ptrdiff_t end = count * (c + 1) / chunks;
    threads.emplace_back([&, c, begin, end] {
      try {
        fn(begin, end);
      } catch (...) {
        errors[static_cast<std::size_t>(c)] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace dpm
