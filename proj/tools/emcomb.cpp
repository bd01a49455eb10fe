#include <iostream>

#include "emcomb/cli.hpp"

int main(int argc, char** argv) { return emcomb::run_cli(argc, argv, std::cout, std::cerr); }
