#pragma once

#include <stdexcept>
#include <string>

namespace gridsched {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Ingest.
class MalformedLine : public Error {
 public:
  using Error::Error;
};
class InvalidRecord : public Error {
 public:
  using Error::Error;
};
class ExcludedRecord : public Error {
 public:
  using Error::Error;
};
class TraceRejected : public Error {
 public:
  using Error::Error;
};

// Model fitting.
class FitFailed : public Error {
 public:
  using Error::Error;
};
class NeedMoreData : public Error {
 public:
  using Error::Error;
};
class FitRejected : public Error {
 public:
  using Error::Error;
};
class SelectionFailed : public Error {
 public:
  using Error::Error;
};

// Percentage error against a non-positive actual value.
class UndefinedError : public Error {
 public:
  using Error::Error;
};

class ConfigInvalid : public Error {
 public:
  using Error::Error;
};
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace gridsched
