#pragma once

#include <functional>

#include <gtest/gtest.h>

#include "taxelmap/error.hpp"

/// Fails unless fn throws taxelmap::Error carrying `code`.
inline void expect_error(taxelmap::ErrorCode code, const std::function<void()>& fn) {
  try {
    fn();
    ADD_FAILURE() << "expected " << taxelmap::to_string(code);
  } catch (const taxelmap::Error& e) {
    EXPECT_EQ(e.code(), code) << e.what();
  }
}
