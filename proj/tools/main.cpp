#include <iostream>

#include "aloha_noma/cli.hpp"

int main(int argc, char** argv)
{
    std::vector<std::string> args(argv + 1, argv + argc);
    return aloha_noma::cli::run(args, std::cout, std::cerr);
}
