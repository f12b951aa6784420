#pragma once

#include <stdexcept>
#include <string>

namespace lexdrift {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input data (files, corpora, tables).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Transport-level failure talking to a completion endpoint.
class NetworkError : public Error {
 public:
  using Error::Error;
};

/// The endpoint rejected our credentials; a run must abort.
class AuthError : public NetworkError {
 public:
  using NetworkError::NetworkError;
};

}  // namespace lexdrift
