#include <iostream>
#include <string>
#include <vector>

#include "xgen/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return xgen::run(args, std::cout, std::cerr);
}
