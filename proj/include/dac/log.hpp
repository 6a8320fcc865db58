#pragma once

#include <cstdio>
#include <cstdlib>
#include <string>

namespace dac {

enum class LogLevel { kError = 0, kInfo = 1, kDebug = 2 };

// Level comes from DAC_LOG_LEVEL (error | info | debug); defaults to info.
inline LogLevel log_level() {
  static const LogLevel level = [] {
    const char* env = std::getenv("DAC_LOG_LEVEL");
    if (!env) return LogLevel::kInfo;
    const std::string v(env);
    if (v == "error") return LogLevel::kError;
    if (v == "debug") return LogLevel::kDebug;
    return LogLevel::kInfo;
  }();
  return level;
}

inline void log_error(const std::string& msg) {
  std::fprintf(stderr, "[error] %s\n", msg.c_str());
}

inline void log_info(const std::string& msg) {
  if (log_level() >= LogLevel::kInfo)
    std::fprintf(stderr, "[info] %s\n", msg.c_str());
}

inline void log_debug(const std::string& msg) {
  if (log_level() >= LogLevel::kDebug)
    std::fprintf(stderr, "[debug] %s\n", msg.c_str());
}

}  // namespace dac
