#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace seqrisk {

/// Malformed corpus or vector file line.
class ParseError : public std::runtime_error {
  public:
    ParseError(std::size_t line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what),
          line_(line) {}

    std::size_t line() const { return line_; }

  private:
    std::size_t line_;
};

/// Well-formed record that violates the corpus schema (unknown code, duplicate id).
class SchemaError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// A statistic whose value is not defined for the given input.
class UndefinedResult : public std::domain_error {
  public:
    using std::domain_error::domain_error;
};

class LookupError : public std::out_of_range {
  public:
    using std::out_of_range::out_of_range;
};

class FormatError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Training produced a non-finite loss.
class DivergedError : public std::runtime_error {
  public:
    DivergedError(int epoch, std::size_t batch, const std::string& what)
        : std::runtime_error("diverged at epoch " + std::to_string(epoch) +
                             ", batch " + std::to_string(batch) + ": " + what),
          epoch_(epoch),
          batch_(batch) {}

    int epoch() const { return epoch_; }
    std::size_t batch() const { return batch_; }

  private:
    int epoch_;
    std::size_t batch_;
};

}  // namespace seqrisk
