#ifndef LCNMT_ERROR_HPP
#define LCNMT_ERROR_HPP

#include <stdexcept>
#include <string>

namespace lcnmt {

// Contract violations: bad shapes, bad arguments, misuse of an API.
// CLI maps these to usage-style failures.
struct ContractError : std::invalid_argument {
  explicit ContractError(const std::string& msg) : std::invalid_argument(msg) {}
};

// Malformed or inconsistent input data (files, vocabularies, ids).
struct DataError : std::runtime_error {
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Token or id outside the vocabulary contract.
struct VocabError : DataError {
  explicit VocabError(const std::string& msg) : DataError(msg) {}
};

// Non-finite values, log of non-positive input, diverged optimization.
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

// An enumeration would exceed its configured cap. Callers may catch this
// to skip an instance; it is never silently truncated.
struct CapError : std::runtime_error {
  explicit CapError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace lcnmt

#endif
