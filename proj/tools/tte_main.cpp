#include "tte/cli.hpp"

int main(int argc, char** argv) { return tte::run_command(argc, argv); }
