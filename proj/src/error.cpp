#include "d2c/error.hpp"

namespace d2c {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_geometry: return "invalid-geometry";
    case ErrorKind::invalid_input: return "invalid-input";
    case ErrorKind::parse: return "parse";
    case ErrorKind::structure: return "structure";
    case ErrorKind::shape: return "shape";
    case ErrorKind::numeric: return "numeric";
    case ErrorKind::vocabulary: return "vocabulary";
    case ErrorKind::metric: return "metric";
    case ErrorKind::undefined_similarity: return "undefined-similarity";
    case ErrorKind::io: return "io";
    case ErrorKind::checkpoint_mismatch: return "checkpoint-mismatch";
  }
  return "unknown";
}

}  // namespace d2c
