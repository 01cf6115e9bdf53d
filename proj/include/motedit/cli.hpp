#pragma once

namespace motedit {

// Command-line front end; returns the process exit code.
int run_cli(int argc, char** argv);

} // namespace motedit
