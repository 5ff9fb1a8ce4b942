#pragma once

#include <stdexcept>
#include <string>

namespace odr {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite or otherwise malformed data.
class InputError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class RankError : public Error {
 public:
  using Error::Error;
};

// A precondition on a solution or iterate that the caller promised.
class ContractError : public Error {
 public:
  using Error::Error;
};

}  // namespace odr
