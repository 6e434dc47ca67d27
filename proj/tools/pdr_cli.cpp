#include "pdr/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return pdr::cli::main(argc, argv, std::cout, std::cerr); }
