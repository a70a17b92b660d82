#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace dbs {

enum class TypeKind : std::uint8_t { Int, Bool, List, Arrow, Var };

class TypeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Simple types: ground types, `list`, right-nested arrows and type variables
/// `t0, t1, ...`. Size is the number of constructors in the term.
class Type {
 public:
  Type() = default;

  static Type integer();
  static Type boolean();
  static Type list(Type elem);
  static Type arrow(Type arg, Type result);
  static Type var(int index);
  /// a1 -> a2 -> ... -> result
  static Type function(const std::vector<Type>& args, Type result);
  /// Parses the textual form produced by to_string(), e.g. "int -> int list -> int list".
  static Type parse(std::string_view text);

  TypeKind kind() const { return kind_; }
  int var_index() const { return var_; }
  bool is_arrow() const { return kind_ == TypeKind::Arrow; }
  bool is_list() const { return kind_ == TypeKind::List; }

  const Type& element() const;
  const Type& arg() const;
  const Type& result() const;

  /// Leading arrow arguments and the final non-arrow result.
  std::vector<Type> arguments() const;
  const Type& final_result() const;
  std::size_t arity() const;

  int size() const;
  bool is_monomorphic() const;
  /// Largest type-variable index, or -1.
  int max_var() const;

  std::string to_string() const;

  friend bool operator==(const Type& a, const Type& b);
  friend bool operator!=(const Type& a, const Type& b) { return !(a == b); }
  friend bool operator<(const Type& a, const Type& b) { return a.to_string() < b.to_string(); }

 private:
  TypeKind kind_ = TypeKind::Int;
  int var_ = 0;
  std::vector<Type> children_;
};

/// Substitution indexed by type-variable number.
using Substitution = std::vector<std::optional<Type>>;

Type substitute(const Substitution& subst, const Type& t);
/// First-order unification with occurs check; extends `subst` on success.
bool unify(const Type& a, const Type& b, Substitution& subst);

/// All monomorphic non-arrow types built from int/bool and `list` with at most
/// `max_size` constructors, in a fixed order.
std::vector<Type> bounded_data_types(int max_size);

}  // namespace dbs
