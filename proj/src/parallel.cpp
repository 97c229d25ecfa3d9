#include "lqglab/parallel.hpp"

#include <cstdlib>
#include <string>

namespace lqg {

unsigned default_workers() {
    if (const char* env = std::getenv("LQGLAB_WORKERS")) {
        try {
            const long v = std::stol(env);
            if (v > 0) return static_cast<unsigned>(v);
        } catch (...) {
        }
    }
    const unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1u : hc;
}

unsigned resolve_workers(unsigned requested) { return requested == 0 ? default_workers() : requested; }

std::vector<Chunk> make_chunks(std::size_t n, std::size_t chunk_size) {
    std::vector<Chunk> chunks;
    if (chunk_size == 0) chunk_size = 1;
    for (std::size_t b = 0, i = 0; b < n; b += chunk_size, ++i) {
        chunks.push_back({i, b, std::min(n, b + chunk_size)});
    }
    return chunks;
}

}  // namespace lqg
