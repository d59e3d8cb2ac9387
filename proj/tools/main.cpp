#include <iostream>
#include <string>
#include <vector>

#include "scanlab/cli_commands.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return scanlab::run_cli(args, std::cout, std::cerr);
}
