#pragma once

#include <ostream>
#include <span>
#include <string>

namespace xgen {

// Entry point of the `xgen` binary. `args` excludes the program name.
// Returns 0 on success, 1 on validation errors (including usage errors) and
// 2 on runtime errors. Errors are printed to `err` as "ERROR <code>: ...".
int run(std::span<const std::string> args, std::ostream& out, std::ostream& err);

}  // namespace xgen
