#include <iostream>

#include "tfqkd/cli.hpp"

int main(int argc, char** argv) { return tfqkd::cli::run(argc, argv, std::cout, std::cerr); }
