#include <iostream>
#include <string>
#include <vector>

#include "vbsim/cli.hpp"

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv, argv + argc);
  return vbsim::cli::run_command(args, std::cout, std::cerr);
}
