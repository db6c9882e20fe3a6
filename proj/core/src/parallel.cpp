#include "gami/parallel.hpp"

#include <cstdlib>
#include <string>

namespace gami {

std::size_t default_threads() {
  if (const char* env = std::getenv("GAMI_THREADS"); env && *env) {
    try {
      const long v = std::stol(env);
      if (v > 0) return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
    }
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

}  // namespace gami
