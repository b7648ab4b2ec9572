#pragma once

#include <string>

namespace eclab {

// Progress lines on stderr, prefixed with elapsed seconds, when ECLAB_LOG is
// set to a nonempty value other than "0". Never part of any output file.
bool log_enabled();
void log_line(const std::string& msg);

}  // namespace eclab
