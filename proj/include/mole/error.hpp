/// @file error.hpp
/// @brief Base exception for the mole library.

#pragma once

#include <stdexcept>

namespace mole {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace mole
