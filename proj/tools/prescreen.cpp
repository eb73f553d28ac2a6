#include <iostream>
#include <string>
#include <vector>

#include "prescreen/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return prescreen::cli::run(args, std::cout, std::cerr);
}
