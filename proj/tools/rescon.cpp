#include <iostream>

#include "rescon/cli.hpp"

int main(int argc, char** argv) { return rescon::run_cli(argc, argv, std::cout, std::cerr); }
