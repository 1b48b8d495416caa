#include <string>
#include <vector>

#include "kaczmarz/cli.hpp"

int main(int argc, char** argv) {
  return kaczmarz::run_cli(std::vector<std::string>(argv + 1, argv + argc));
}
