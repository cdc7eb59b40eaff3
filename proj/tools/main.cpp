#include "tridecomp/cli.hpp"

int main(int argc, char** argv) { return tridecomp::dispatch(argc, argv); }
