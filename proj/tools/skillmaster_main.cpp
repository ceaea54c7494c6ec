#include <iostream>

#include "skillmaster/cli.hpp"

int main(int argc, char** argv) {
  return skillmaster::run_cli(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
