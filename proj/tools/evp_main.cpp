#include "evp/cli.hpp"

int main(int argc, char** argv) { return evp::cli::main_entry(argc, argv); }
