#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace kt {

enum ExitCode : int { ok = 0, validation = 2, convergence = 3, usage = 64 };

// Runs one `kt` invocation. args excludes the program name. Results go to
// --out (or `out`), the run manifest to --out.manifest.json (or `err`).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace kt
