#include "fcr/cli.hpp"

int main(int argc, char** argv) { return fcr::cli::run(argc, argv); }
