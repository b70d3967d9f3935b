#include <iostream>

#include "cfreg/cli.hpp"

int main(int argc, char** argv) { return cfreg::run_cli(argc, argv, std::cout, std::cerr); }
