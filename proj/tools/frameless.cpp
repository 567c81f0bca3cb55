#include <iostream>

#include "frameless/cli.hpp"

int main(int argc, char** argv)
{
    return frameless::cli::run(argc, argv, std::cout, std::cerr);
}
