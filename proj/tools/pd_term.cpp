#include "commands.hpp"

int main(int argc, char** argv) { return pdterm::cli::run(argc, argv); }
