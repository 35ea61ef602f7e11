#ifndef TWINCBR_ERRORS_HPP_
#define TWINCBR_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace twincbr {

// Root of every exception the library throws on bad data, bad model files or
// requests that have no answer (e.g. no unlike neighbour exists).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Ingestion, schema conformance and case-base construction failures.
class DataError : public Error {
 public:
  using Error::Error;
};

// Shape or dimension mismatches, malformed model files.
class ModelError : public Error {
 public:
  using Error::Error;
};

class TrainingDiverged : public ModelError {
 public:
  explicit TrainingDiverged(int epoch)
      : ModelError("training diverged: non-finite loss at epoch " +
                   std::to_string(epoch)),
        epoch_(epoch) {}

  int epoch() const { return epoch_; }

 private:
  int epoch_;
};

// An explanation cannot be produced for the given inputs.
class ExplanationError : public Error {
 public:
  using Error::Error;
};

}  // namespace twincbr

#endif  // TWINCBR_ERRORS_HPP_
