#include <iostream>

#include "worcs/cli.hpp"

int main(int argc, char** argv) {
  return worcs::run_cli(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
