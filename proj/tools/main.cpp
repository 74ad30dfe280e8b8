#include "cli.hpp"

int main(int argc, char** argv) { return curlaw::cli::main_entry(argc, argv); }
