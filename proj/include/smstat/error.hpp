#pragma once

#include <stdexcept>
#include <string>

namespace smstat {

// Root of every error thrown by the library. Each subclass names one failure
// category so callers (and the CLI) can react without string matching.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class InvalidDimension : public Error {
public:
  using Error::Error;
};

class SingularCovariance : public Error {
public:
  using Error::Error;
};

class DomainError : public Error {
public:
  using Error::Error;
};

class DegenerateSeries : public Error {
public:
  using Error::Error;
};

class MissingRelation : public Error {
public:
  explicit MissingRelation(const std::string& id)
      : Error("missing relation for id '" + id + "'"), id_(id) {}
  const std::string& id() const noexcept { return id_; }

private:
  std::string id_;
};

class EmptyPeriod : public Error {
public:
  using Error::Error;
};

class MisalignedSeries : public Error {
public:
  using Error::Error;
};

class ZeroBenchmark : public Error {
public:
  using Error::Error;
};

class ParameterError : public Error {
public:
  using Error::Error;
};

class ConfigurationError : public Error {
public:
  using Error::Error;
};

class ParseError : public Error {
public:
  using Error::Error;
};

}  // namespace smstat
