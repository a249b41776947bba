#pragma once

#include <stdexcept>
#include <string>

namespace cocycle_lab {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DegenerateInput : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

/// Randomized search (e.g. for a transversal vector) exhausted its retries.
class SearchFailure : public Error {
 public:
  using Error::Error;
};

/// Round-off accumulated beyond what re-certification can repair.
class NumericalDegradation : public Error {
 public:
  using Error::Error;
};

class ConvergenceFailure : public Error {
 public:
  using Error::Error;
};

/// Holonomies are only defined for fiber-bunched cocycles.
class CertificateRequired : public Error {
 public:
  using Error::Error;
};

/// A point is not on the stable/unstable set it was claimed to be on.
class NotOnLeaf : public Error {
 public:
  using Error::Error;
};

class SupportCollision : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

}  // namespace cocycle_lab
