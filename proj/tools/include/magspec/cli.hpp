#pragma once

#include <iosfwd>

namespace magspec::cli {

/// Runs the magspec command line. Returns 0 on success, 1 when a numerical
/// module raised an error or a validation check failed, 2 on usage errors.
int run(int argc, char** argv);
int run(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace magspec::cli
