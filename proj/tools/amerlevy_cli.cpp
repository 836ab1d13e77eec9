#include "amerlevy/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return amerlevy::run_cli(argc, argv, std::cout, std::cerr); }
