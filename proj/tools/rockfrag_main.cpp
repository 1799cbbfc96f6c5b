#include <iostream>

#include "rockfrag/cli.hpp"

int main(int argc, char** argv) { return rockfrag::cli::run(argc, argv, std::cout, std::cerr); }
