#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace d2c {

enum class ErrorKind {
  invalid_geometry,
  invalid_input,
  parse,
  structure,
  shape,
  numeric,
  vocabulary,
  metric,
  undefined_similarity,
  io,
  checkpoint_mismatch,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Tokenizer/parser failures carry the byte offset into the source.
class ParseError : public Error {
 public:
  ParseError(ErrorKind kind, const std::string& what, std::size_t offset)
      : Error(kind, what + " at offset " + std::to_string(offset)),
        offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

}  // namespace d2c
