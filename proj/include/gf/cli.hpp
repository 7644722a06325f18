#pragma once

namespace gf {

/// Command-line surface: synth-scene, gen-pairs, train, render, eval,
/// oracle-mock. Returns the process exit status (0 ok, 2 usage error,
/// 1 runtime failure).
int cli_dispatch(int argc, const char* const* argv);

}  // namespace gf
