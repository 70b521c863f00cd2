#pragma once

#include <stdexcept>
#include <string>

namespace nmer {

// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidInput : public Error {
 public:
  using Error::Error;
};

class InvalidParameter : public Error {
 public:
  using Error::Error;
};

class InvalidConfig : public Error {
 public:
  using Error::Error;
};

class EmptyBuffer : public Error {
 public:
  EmptyBuffer() : Error("replay buffer is empty") {}
  using Error::Error;
};

class InsufficientPopulation : public Error {
 public:
  using Error::Error;
};

class UninitializedMoments : public Error {
 public:
  UninitializedMoments() : Error("running moments have no data") {}
};

}  // namespace nmer
