#include <iostream>

#include "mmvad/cli.hpp"

int main(int argc, char** argv) { return mmvad::cli::run_cli(argc, argv, std::cout, std::cerr); }
