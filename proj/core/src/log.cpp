#include "facetrace/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace facetrace {
namespace {

std::atomic<LogLevel> g_level{LogLevel::kWarning};
std::mutex g_mutex;

void emit(std::string_view tag, std::string_view message) {
  std::lock_guard lock(g_mutex);
  std::cerr << "[facetrace] " << tag << ": " << message << '\n';
}

}  // namespace

void set_log_level(LogLevel level) { g_level = level; }
LogLevel log_level() { return g_level; }

void log_warning(std::string_view message) {
  if (g_level >= LogLevel::kWarning) emit("warning", message);
}

void log_info(std::string_view message) {
  if (g_level >= LogLevel::kInfo) emit("info", message);
}

}  // namespace facetrace
