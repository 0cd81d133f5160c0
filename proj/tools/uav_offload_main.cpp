#include <iostream>
#include <string>
#include <vector>

#include "uav_offload/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return uav_offload::run_cli(args, std::cout, std::cerr);
}
