#include <string>
#include <vector>

#include "mimic/cli.hpp"

int main(int argc, char** argv) { return mimic::run_cli(std::vector<std::string>(argv, argv + argc)); }
