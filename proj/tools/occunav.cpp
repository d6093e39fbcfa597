#include "occunav/cli.hpp"

int main(int argc, char** argv) { return occunav::cli_main(argc, argv); }
