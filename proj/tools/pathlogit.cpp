#include <iostream>

#include "pathlogit/cli.hpp"

int main(int argc, char** argv) { return pathlogit::run_cli(argc, argv, std::cout, std::cerr); }
