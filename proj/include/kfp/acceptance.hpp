#pragma once

#include <iosfwd>

namespace kfp {

// Full verification battery: one line per criterion, tolerance and runtime
// budget enforced together. Returns true only when every line passes.
bool run_acceptance_suite(std::ostream& out);

} // namespace kfp
