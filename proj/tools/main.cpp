#include "flq/cli.hpp"

int main(int argc, char** argv) { return flq::run_cli(argc, argv); }
