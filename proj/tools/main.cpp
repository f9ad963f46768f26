#include <iostream>

#include "sketchrefine/cli.hpp"

int main(int argc, char** argv) { return sketchrefine::run_cli(argc, argv, std::cout, std::cerr); }
