#include "ldinfo/cli.hpp"

int main(int argc, char** argv) { return ldinfo::cli::run_cli(argc, argv); }
