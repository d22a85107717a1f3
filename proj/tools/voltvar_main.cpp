#include "voltvar/cli.hpp"

int main(int argc, char** argv) {
    return voltvar::run_cli(argc, argv);
}
