#include <iostream>
#include <string>
#include <vector>

#include "inrsteg/cli.hpp"

int main(int argc, char** argv)
{
    std::vector<std::string> args(argv + 1, argv + argc);
    return inrsteg::cli::run(args, std::cout, std::cerr);
}
