#include "rld/cli.hpp"

int main(int argc, char** argv) { return rld::run_cli(argc, argv); }
