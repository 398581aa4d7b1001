/// @file mole.cpp
/// @brief Command-line entry point.

#include <iostream>

#include "mole/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return mole::cli::run(args, std::cout, std::cerr);
}
