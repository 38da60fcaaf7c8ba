#include "cli.hpp"

int main(int argc, char** argv) { return mirrorcle::cli::run(argc, argv); }
