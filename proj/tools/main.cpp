#include <string>
#include <vector>

#include "hcmu/cli.hpp"

int main(int argc, char** argv) {
  return hcmu::cli::dispatch(std::vector<std::string>(argv + 1, argv + argc));
}
