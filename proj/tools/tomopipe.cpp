#include <iostream>

#include "tomopipe/cli.hpp"

int main(int argc, char** argv) { return tomopipe::run_cli(argc, argv, std::cout, std::cerr); }
