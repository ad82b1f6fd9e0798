#include <iostream>

#include "mpgo/cli.hpp"

int main(int argc, char** argv) { return mpgo::cli_main(argc, argv, std::cout, std::cerr); }
