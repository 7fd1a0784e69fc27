#include <gtest/gtest.h>

#include "courtpipe/adjudication.hpp"

TEST(Placeholder, adjudication) { SUCCEED(); }
