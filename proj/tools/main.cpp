#include <iostream>

#include "trinuseg/cli.hpp"

int main(int argc, char** argv) { return trinuseg::run_cli(argc, argv, std::cout, std::cerr); }
