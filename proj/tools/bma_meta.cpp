#include <iostream>

#include "bmameta/cli.hpp"

int main(int argc, char** argv) { return bmameta::run_cli(argc, argv, std::cout, std::cerr); }
