#include "gf/cli.hpp"

int main(int argc, char** argv) { return gf::cli_dispatch(argc, argv); }
