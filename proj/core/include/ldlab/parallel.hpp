#pragma once

#include <cstddef>
#include <functional>

namespace ldlab {

/// Worker count used by the data-parallel site loops. 1 means serial and
/// bitwise reproducible; results for a fixed count are deterministic.
void set_num_threads(int n);
int num_threads();

/// Splits [0, n) into num_chunks() contiguous chunks and runs
/// body(begin, end, chunk) for each, concurrently when more than one worker
/// is configured. Chunk boundaries depend only on n and the worker count.
void parallel_chunks(std::size_t n, const std::function<void(std::size_t, std::size_t, int)>& body);
int num_chunks(std::size_t n);

}  // namespace ldlab
