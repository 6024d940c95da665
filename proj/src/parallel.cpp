#include "latcap/parallel.hpp"

#include <cstdlib>
#include <string>

namespace latcap {

int default_workers() {
  if (const char* env = std::getenv("LATCAP_WORKERS")) {
    try {
      const int w = std::stoi(env);
      if (w >= 1) return w;
    } catch (const std::exception&) {
    }
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace latcap
