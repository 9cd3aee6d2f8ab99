#include <iostream>
#include <string>
#include <vector>

#include "ofb/commands.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return ofb::run_command(args, std::cout, std::cerr);
}
