#include <harperdisc/cli.hpp>

int main(int argc, char** argv) { return harperdisc::cli::run(argc, argv); }
