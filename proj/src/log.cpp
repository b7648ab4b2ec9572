#include "eclab/log.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace eclab {

namespace {
const auto kStart = std::chrono::steady_clock::now();
}

bool log_enabled() {
  static const bool on = [] {
    const char* v = std::getenv("ECLAB_LOG");
    return v != nullptr && *v != '\0' && std::strcmp(v, "0") != 0;
  }();
  return on;
}

void log_line(const std::string& msg) {
  if (!log_enabled()) return;
  const double t = std::chrono::duration<double>(std::chrono::steady_clock::now() - kStart).count();
  std::fprintf(stderr, "[%9.1f] %s\n", t, msg.c_str());
  std::fflush(stderr);
}

}  // namespace eclab
