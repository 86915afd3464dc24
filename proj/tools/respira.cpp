#include <iostream>
#include <string>
#include <vector>

#include "respira/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return respira::run_cli(args, std::cout, std::cerr);
}
