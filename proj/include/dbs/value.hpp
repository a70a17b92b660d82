#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace dbs {

struct Primitive;

enum class ErrorCode : std::uint8_t { EmptyList, Overflow, TypeMismatch, UnboundVariable, NotAFunction };

std::string to_string(ErrorCode code);

/// Runtime values. Errors are ordinary values so that evaluation is total.
class Value {
 public:
  using List = std::vector<Value>;

  struct Function {
    const Primitive* atom;
    friend bool operator==(const Function&, const Function&) = default;
  };
  struct Error {
    ErrorCode code;
    friend bool operator==(const Error&, const Error&) = default;
  };

  Value() : v_(std::int64_t{0}) {}

  static Value integer(std::int64_t x) { return Value(Storage{x}); }
  static Value boolean(bool b) { return Value(Storage{b}); }
  static Value list(List items) { return Value(Storage{std::make_shared<const List>(std::move(items))}); }
  static Value int_list(std::span<const std::int64_t> xs);
  static Value function(const Primitive* atom) { return Value(Storage{Function{atom}}); }
  static Value error(ErrorCode code) { return Value(Storage{Error{code}}); }

  bool is_int() const { return std::holds_alternative<std::int64_t>(v_); }
  bool is_bool() const { return std::holds_alternative<bool>(v_); }
  bool is_list() const { return std::holds_alternative<ListPtr>(v_); }
  bool is_function() const { return std::holds_alternative<Function>(v_); }
  bool is_error() const { return std::holds_alternative<Error>(v_); }

  std::int64_t as_int() const { return std::get<std::int64_t>(v_); }
  bool as_bool() const { return std::get<bool>(v_); }
  const List& as_list() const { return *std::get<ListPtr>(v_); }
  const Primitive* as_function() const { return std::get<Function>(v_).atom; }
  ErrorCode error_code() const { return std::get<Error>(v_).code; }

  /// Deep structural equality; errors compare by code.
  friend bool operator==(const Value& a, const Value& b);
  friend bool operator!=(const Value& a, const Value& b) { return !(a == b); }

  std::size_t hash() const;
  /// `3`, `true`, `[1,2]`, `<fn +1>`, `error(empty-list)`
  std::string to_string() const;
  /// Self-delimiting byte encoding; used inside program canonical keys.
  void encode(std::string& out) const;

 private:
  using ListPtr = std::shared_ptr<const List>;
  using Storage = std::variant<std::int64_t, bool, ListPtr, Function, Error>;
  explicit Value(Storage s) : v_(std::move(s)) {}
  Storage v_;
};

}  // namespace dbs
