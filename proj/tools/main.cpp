#include <iostream>

#include "altprice_cli.hpp"

int main(int argc, char **argv)
{
    return altprice::cli::run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
