#include <iostream>

#include "gridtrack/cli.hpp"

int main(int argc, char** argv) { return gridtrack::run_cli(argc, argv, std::cout, std::cerr); }
