#include <iostream>
#include <string>
#include <vector>

#include "har/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    return har::cli::run(args, std::cin, std::cout, std::cerr);
}
