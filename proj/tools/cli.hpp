#pragma once

#include <ostream>

namespace mmcyto::cli {

/// Exit codes: 0 success, 1 runtime or I/O error, 2 usage error.
int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mmcyto::cli
