#include <cstdio>

int main() {
  std::puts("desmoke: subcommands pending");
  return 0;
}
