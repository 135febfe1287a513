#include <iostream>
#include <string>
#include <vector>

#include "pmpir/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return pmpir::cli::run(args, std::cout, std::cerr);
}
