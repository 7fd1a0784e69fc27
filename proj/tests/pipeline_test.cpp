#include <gtest/gtest.h>

#include "courtpipe/pipeline.hpp"

TEST(Placeholder, pipeline) { SUCCEED(); }
