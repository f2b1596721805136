#include "memsfde/commands.hpp"

int main(int argc, char** argv) { return memsfde::cli::run_cli(argc, argv); }
