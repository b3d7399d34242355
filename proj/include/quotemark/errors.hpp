#pragma once

#include <stdexcept>
#include <string>

namespace quotemark {

enum class ErrorKind {
  MissingFile,
  MalformedRow,
  DanglingReference,
  EmptyInput,
  EmptyGold,
  EmptyCharacterList,
  EmptyDataset,
  TooFewNovels,
  DivergenceDetected,
  ShapeMismatch,
  MissingPrediction,
  UsageError,
};

const char* error_kind_name(ErrorKind kind);

struct Error : std::runtime_error {
  ErrorKind kind;
  Error(ErrorKind k, const std::string& msg)
      : std::runtime_error(std::string(error_kind_name(k)) + ": " + msg),
        kind(k) {}
};

}  // namespace quotemark
