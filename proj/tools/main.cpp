#include "mdvt/cli.hpp"

int main(int argc, char** argv) { return mdvt::cli::run(argc, argv); }
