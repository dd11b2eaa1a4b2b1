#pragma once

#include <functional>
#include <string>

namespace mhne {

enum class LogLevel { Info, Warning };

using LogSink = std::function<void(LogLevel, const std::string&)>;

/// Replaces the process-wide sink. An empty sink silences logging.
/// Default writes warnings to stderr and drops info messages.
void set_log_sink(LogSink sink);
void log(LogLevel level, const std::string& msg);

inline void warn(const std::string& msg) { log(LogLevel::Warning, msg); }
inline void info(const std::string& msg) { log(LogLevel::Info, msg); }

}  // namespace mhne
