#include "mhne/log.hpp"

#include <iostream>
#include <mutex>

namespace mhne {

namespace {

std::mutex& sink_mutex() {
  static std::mutex mu;
  return mu;
}

LogSink& sink() {
  static LogSink s = [](LogLevel level, const std::string& msg) {
    if (level == LogLevel::Warning) std::cerr << "warning: " << msg << '\n';
  };
  return s;
}

}  // namespace

void set_log_sink(LogSink s) {
  std::lock_guard lock(sink_mutex());
  sink() = std::move(s);
}

void log(LogLevel level, const std::string& msg) {
  std::lock_guard lock(sink_mutex());
  if (sink()) sink()(level, msg);
}

}  // namespace mhne
