#include <gtest/gtest.h>

#include "courtpipe/retrieval.hpp"

TEST(Placeholder, retrieval) { SUCCEED(); }
