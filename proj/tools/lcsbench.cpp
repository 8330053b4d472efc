#include <iostream>

#include "lcsbench/cli.hpp"

int main(int argc, char** argv) { return lcsbench::runCli(argc, argv, std::cout, std::cerr); }
