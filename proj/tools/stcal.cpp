#include "stcal/cli/commands.hpp"

int main(int argc, char** argv) { return stcal::cli::run(argc, argv); }
