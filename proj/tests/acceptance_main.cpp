// Dedicated acceptance runner: one line per criterion, exit 0 iff all pass.
#include <iostream>

#include "loopalloc/verify.hpp"

int main() { return loopalloc::verify::run_and_report(std::cout); }
