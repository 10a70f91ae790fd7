#include <iostream>

#include "draco/cli/commands.hpp"

int main(int argc, char** argv) { return draco::cli::run(argc, argv, std::cout, std::cerr); }
