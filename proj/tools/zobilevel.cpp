#include <iostream>

#include "zobilevel/cli.hpp"

int main(int argc, char** argv) { return zobilevel::run_cli(argc, argv, std::cout, std::cerr); }
