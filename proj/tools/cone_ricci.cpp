#include <cone_ricci/cli.hpp>

int main(int argc, char** argv) { return cone_ricci::cli::run(argc, argv); }
