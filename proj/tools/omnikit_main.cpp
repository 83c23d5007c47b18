#include "omnikit/cli.hpp"

int main(int argc, char** argv) { return omnikit::cli::run(argc, argv); }
