#include <gtest/gtest.h>

#include "courtpipe/case_model.hpp"

TEST(Placeholder, case_model) { SUCCEED(); }
