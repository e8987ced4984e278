#pragma once

#include <stdexcept>
#include <string>

namespace overhyp {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidParameter : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

/// A covariance or information matrix failed to factorize.
class NumericalSingularity : public Error {
 public:
  using Error::Error;
};

class InitializationError : public Error {
 public:
  using Error::Error;
};

class AdaptationFailure : public Error {
 public:
  using Error::Error;
};

class InsufficientDraws : public Error {
 public:
  using Error::Error;
};

/// Design matrix lacks full column rank. `factor()` names the offending term.
class RankDeficiency : public Error {
 public:
  RankDeficiency(const std::string& factor, const std::string& what)
      : Error(what), factor_(factor) {}
  const std::string& factor() const noexcept { return factor_; }

 private:
  std::string factor_;
};

class SeparationError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class SchemaError : public Error {
 public:
  using Error::Error;
};

namespace detail {

inline void require(bool ok, const std::string& msg) {
  if (!ok) throw InvalidParameter(msg);
}

inline void require_dims(bool ok, const std::string& msg) {
  if (!ok) throw DimensionMismatch(msg);
}

}  // namespace detail
}  // namespace overhyp
