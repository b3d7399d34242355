#include "quotemark/errors.hpp"

namespace quotemark {

const char* error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::MissingFile: return "MissingFile";
    case ErrorKind::MalformedRow: return "MalformedRow";
    case ErrorKind::DanglingReference: return "DanglingReference";
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::EmptyGold: return "EmptyGold";
    case ErrorKind::EmptyCharacterList: return "EmptyCharacterList";
    case ErrorKind::EmptyDataset: return "EmptyDataset";
    case ErrorKind::TooFewNovels: return "TooFewNovels";
    case ErrorKind::DivergenceDetected: return "DivergenceDetected";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::MissingPrediction: return "MissingPrediction";
    case ErrorKind::UsageError: return "UsageError";
  }
  return "Error";
}

}  // namespace quotemark
