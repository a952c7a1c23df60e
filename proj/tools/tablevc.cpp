#include <iostream>
#include <string>
#include <vector>

#include "tablevc/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return tablevc::run_cli(args, std::cout, std::cerr);
}
