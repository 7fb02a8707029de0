#include "bdnet/parallel.hpp"

#include <cstdlib>
#include <string>

namespace bdnet {

namespace {

std::atomic<std::size_t>& configured() {
  static std::atomic<std::size_t> n{0};
  return n;
}

}  // namespace

std::size_t thread_count() {
  if (const auto n = configured().load(); n > 0) return n;
  if (const char* env = std::getenv("BDNET_THREADS"); env != nullptr) {
    try {
      const long v = std::stol(env);
      if (v > 0) return static_cast<std::size_t>(v);
    } catch (...) {
    }
  }
  const auto hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

void set_thread_count(std::size_t n) { configured().store(n); }

}  // namespace bdnet
