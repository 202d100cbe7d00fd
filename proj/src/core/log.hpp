#pragma once

#include <string>

// Diagnostics routed through spdlog. The level comes from SVGP_LOG
// (error|warn|info|debug); default is warn.
namespace svgp::logging {

void init_from_env();
// False for a name outside error|warn|info|debug.
bool set_level(const std::string& name);
void warn(const std::string& msg);
void info(const std::string& msg);
void debug(const std::string& msg);
void error(const std::string& msg);

}  // namespace svgp::logging
