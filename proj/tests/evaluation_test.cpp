#include <gtest/gtest.h>

#include "courtpipe/evaluation.hpp"

TEST(Placeholder, evaluation) { SUCCEED(); }
