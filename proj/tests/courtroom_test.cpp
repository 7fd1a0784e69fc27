#include <gtest/gtest.h>

#include "courtpipe/courtroom.hpp"

TEST(Placeholder, courtroom) { SUCCEED(); }
