#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "dbs/dsl.hpp"
#include "dbs/program.hpp"
#include "dbs/type.hpp"
#include "dbs/value.hpp"

namespace dbs {

/// Type environment in de Bruijn order: env[i] is the type of variable i.
using TypeEnv = std::vector<Type>;

/// de Bruijn environment of a type request `a1 -> ... -> an -> r`: [an, ..., a1].
TypeEnv environment_of(const Type& type_request);

/// Monomorphic type of `p`, or TypeError naming the offending node.
Type infer_type(const Program& p, const TypeEnv& env);

/// Memo table for evaluation results keyed by (program, input-set id).
/// Not thread-safe; one cache per worker.
class EvalCache {
 public:
  const Value* find(std::uint64_t inputs_id, const Program& p) const;
  void insert(std::uint64_t inputs_id, const Program& p, Value v);
  std::size_t size() const { return map_.size(); }
  std::uint64_t hits() const { return hits_; }
  std::uint64_t misses() const { return misses_; }
  void clear() { map_.clear(); }

 private:
  struct Key {
    std::uint64_t inputs_id;
    Program program;
    friend bool operator==(const Key& a, const Key& b) { return a.inputs_id == b.inputs_id && a.program == b.program; }
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const { return k.program.hash() ^ (k.inputs_id * 0x9e3779b97f4a7c15ULL); }
  };
  std::unordered_map<Key, Value, KeyHash> map_;
  mutable std::uint64_t hits_ = 0;
  mutable std::uint64_t misses_ = 0;
};

/// Big-step evaluation. `inputs[i]` is the value of variable i (de Bruijn
/// order). Any error argument yields an error result.
Value evaluate(const Program& p, std::span<const Value> inputs);

/// Memoized evaluation; `inputs_id` must uniquely identify `inputs`. When
/// `cache_root` is false the root result is computed but not stored, which
/// keeps caches from filling up with one-shot top-level programs.
Value evaluate(const Program& p, std::span<const Value> inputs, std::uint64_t inputs_id, EvalCache& cache,
               bool cache_root = true);

/// Parses the s-expression form printed by Program::to_string() and
/// instantiates polymorphic primitives by type inference against `type_request`.
Program parse_program(const Dsl& dsl, std::string_view text, const Type& type_request);

}  // namespace dbs
