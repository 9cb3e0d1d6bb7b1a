#pragma once

#include <string>

namespace frontlab {

// Thin wrappers over spdlog so the core headers stay free of it.
// Level comes from FRONTLAB_LOG (trace, debug, info, warn, error, off); default warn.
void log_debug(const std::string& msg);
void log_info(const std::string& msg);
void log_warn(const std::string& msg);

}  // namespace frontlab
