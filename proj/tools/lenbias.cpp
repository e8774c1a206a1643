#include <iostream>
#include <string>
#include <vector>

#include "lenbias/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return lenbias::run_cli(args, std::cout, std::cerr);
}
