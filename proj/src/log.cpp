#include "frontlab/log.hpp"

#include <cstdlib>
#include <mutex>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

namespace frontlab {

namespace {

spdlog::logger& logger() {
  static std::once_flag once;
  static std::shared_ptr<spdlog::logger> lg;
  std::call_once(once, [] {
    lg = spdlog::stderr_color_mt("frontlab");
    const char* lvl = std::getenv("FRONTLAB_LOG");
    lg->set_level(lvl ? spdlog::level::from_str(lvl) : spdlog::level::warn);
    lg->set_pattern("[%l] %v");
  });
  return *lg;
}

}  // namespace

void log_debug(const std::string& msg) { logger().debug(msg); }
void log_info(const std::string& msg) { logger().info(msg); }
void log_warn(const std::string& msg) { logger().warn(msg); }

}  // namespace frontlab
