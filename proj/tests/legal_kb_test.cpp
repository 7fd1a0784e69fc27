#include <gtest/gtest.h>

#include "courtpipe/legal_kb.hpp"

TEST(Placeholder, legal_kb) { SUCCEED(); }
