#include "rbsr/cli.hpp"

int main(int argc, char** argv) { return rbsr::dispatch(argc, argv); }
