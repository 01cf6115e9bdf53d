#include "motedit/cli.hpp"

int main(int argc, char** argv) { return motedit::run_cli(argc, argv); }
