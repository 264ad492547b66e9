#include <iostream>

#include "hsinoise/cli.hpp"

int main(int argc, char** argv) { return hsinoise::run_cli(argc, argv, std::cout, std::cerr); }
