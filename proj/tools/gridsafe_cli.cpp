#include "gridsafe/cli/app.hpp"

int main(int argc, char** argv) { return gridsafe::cli::run_command(argc, argv); }
