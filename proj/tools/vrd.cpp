#include <iostream>

#include "vrd/cli/cli.hpp"

int main(int argc, char** argv) { return vrd::cli::run(argc, argv, std::cout, std::cerr); }
