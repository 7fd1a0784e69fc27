#include <gtest/gtest.h>

#include "courtpipe/llm_backend.hpp"

TEST(Placeholder, llm_backend) { SUCCEED(); }
