#include "vioc/commands.hpp"

int main(int argc, char** argv)
{
    return vioc::run_cli(argc, argv);
}
