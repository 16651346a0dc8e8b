#pragma once

#include <doctest.h>

#include "qmarkov/errors.hpp"

// Runs `expr` and checks that it throws qmarkov::Error with the given code.
#define CHECK_ERROR_CODE(expr, expected)                        \
  do {                                                          \
    bool thrown_ = false;                                       \
    try {                                                       \
      (void)(expr);                                             \
    } catch (const qmarkov::Error& e_) {                        \
      thrown_ = true;                                           \
      CHECK(e_.code() == (expected));                           \
    }                                                           \
    CHECK_MESSAGE(thrown_, "expected qmarkov::Error: " #expr);  \
  } while (0)
