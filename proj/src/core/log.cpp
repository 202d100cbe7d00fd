#include "log.hpp"

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <mutex>

#include "linalg.hpp"

namespace svgp {

std::size_t& jitter_event_counter() {
  thread_local std::size_t count = 0;
  return count;
}

namespace logging {
namespace {

bool parse_level(const std::string& v, spdlog::level::level_enum& level) {
  if (v == "error") level = spdlog::level::err;
  else if (v == "warn") level = spdlog::level::warn;
  else if (v == "info") level = spdlog::level::info;
  else if (v == "debug") level = spdlog::level::debug;
  else return false;
  return true;
}

std::shared_ptr<spdlog::logger> logger() {
  static std::once_flag once;
  static std::shared_ptr<spdlog::logger> instance;
  std::call_once(once, [] {
    instance = spdlog::stderr_color_mt("svgp");
    instance->set_pattern("[%l] %v");
    spdlog::level::level_enum level = spdlog::level::warn;
    if (const char* env = std::getenv("SVGP_LOG")) parse_level(env, level);
    instance->set_level(level);
  });
  return instance;
}

}  // namespace

void init_from_env() { logger(); }

bool set_level(const std::string& name) {
  spdlog::level::level_enum level;
  if (!parse_level(name, level)) return false;
  logger()->set_level(level);
  return true;
}
void warn(const std::string& msg) { logger()->warn(msg); }
void info(const std::string& msg) { logger()->info(msg); }
void debug(const std::string& msg) { logger()->debug(msg); }
void error(const std::string& msg) { logger()->error(msg); }

}  // namespace logging
}  // namespace svgp
