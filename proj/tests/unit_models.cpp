#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

int main_placeholder();
TEST_CASE("placeholder") { CHECK(true); }
