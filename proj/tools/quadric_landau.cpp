#include "qlandau/cli.hpp"

int main(int argc, char** argv) { return qlandau::cli::run(argc, argv); }
