#include "qbrayton/cli.hpp"

int main(int argc, char** argv) { return qbrayton::cli::run(argc, argv); }
