#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dbs/type.hpp"
#include "dbs/value.hpp"

namespace dbs {

using Semantics = std::function<Value(std::span<const Value>)>;

enum class PrimitiveKind : std::uint8_t {
  Function,
  /// A nullary symbol whose value is a first-order function, used as the
  /// functional argument of map/filter/fold/zipwith.
  LambdaAtom,
};

struct Primitive {
  std::string name;
  /// Possibly polymorphic. For lambda atoms this is the atom's own arrow type.
  Type signature;
  /// Number of program arguments: leading arrows of `signature`, 0 for atoms.
  std::size_t arity = 0;
  PrimitiveKind kind = PrimitiveKind::Function;
  /// Arguments are never error values; see evaluate().
  Semantics semantics;
};

/// A primitive with every type variable instantiated, e.g. `take[int]`.
struct PrimitiveInstance {
  const Primitive* base = nullptr;
  Type type;
  std::vector<Type> arg_types;
  /// For lambda atoms the arrow type itself.
  Type return_type;
  std::string label;
  std::size_t label_hash = 0;

  std::size_t arity() const { return arg_types.size(); }
  const std::string& name() const { return base->name; }
  bool is_lambda_atom() const { return base->kind == PrimitiveKind::LambdaAtom; }
};

/// Applies a function value produced by a lambda atom.
Value call_function(const Value& f, std::span<const Value> args);

/// A set of primitives plus the interning table for their monomorphic
/// instances. Programs and grammars keep raw pointers into it, so a Dsl must
/// outlive everything built from it.
class Dsl {
 public:
  explicit Dsl(std::string name, int max_type_size = 3);
  Dsl(const Dsl&) = delete;
  Dsl& operator=(const Dsl&) = delete;

  const std::string& name() const { return name_; }
  /// Bound on constructors of a type-variable instantiation.
  int max_type_size() const { return max_type_size_; }

  const Primitive& add(std::string name, std::string_view signature, Semantics fn);
  const Primitive& add_lambda_atom(std::string name, std::string_view type, Semantics fn);

  const std::vector<std::unique_ptr<Primitive>>& primitives() const { return primitives_; }
  const Primitive* find(std::string_view name) const;

  /// Interned instance; every type variable of the signature must be bound by `subst`.
  const PrimitiveInstance& instantiate(const Primitive& p, const Substitution& subst) const;
  const PrimitiveInstance& instantiate(std::string_view name, const Substitution& subst = {}) const;

 private:
  std::string name_;
  int max_type_size_;
  std::vector<std::unique_ptr<Primitive>> primitives_;
  mutable std::mutex mutex_;
  mutable std::map<std::string, std::unique_ptr<PrimitiveInstance>, std::less<>> instances_;
};

/// The built-in integer-list DSL: head, tail, cons, append, rev, sort, take,
/// drop, sum, length, map, filter, zipwith, fold, the constants -1 0 1 2 and
/// the lambda atoms +1 *2 >0 <0 even + * max. One shared instance per process.
std::shared_ptr<const Dsl> list_mini();

}  // namespace dbs
