#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "dbs/dsl.hpp"
#include "dbs/type.hpp"
#include "dbs/value.hpp"

namespace dbs {

/// Node tags double as the first byte of each node's canonical token. Holes
/// of partial programs use tag 0 so they order below every complete node.
enum class NodeKind : std::uint8_t { Variable = 1, Apply = 2, Constant = 3 };

struct ProgramNode;

/// Immutable, shared program tree. Copies are cheap and share structure.
/// Apply nodes reference interned PrimitiveInstances of a Dsl that must
/// outlive the program.
class Program {
 public:
  Program() = default;

  /// de Bruijn variable; index 0 is the innermost (last declared) argument.
  static Program variable(std::uint32_t index);
  static Program apply(const PrimitiveInstance& prim, std::vector<Program> args);
  static Program constant(Value v, Type type);
  /// Constant whose type is read off the value (an empty list is `int list`).
  static Program constant(Value v);

  explicit operator bool() const { return static_cast<bool>(node_); }
  const ProgramNode* get() const { return node_.get(); }
  const ProgramNode* operator->() const { return node_.get(); }

  NodeKind kind() const;
  std::uint32_t var_index() const;
  const PrimitiveInstance& primitive() const;
  const Value& value() const;
  const Type& constant_type() const;
  std::span<const Program> args() const;

  /// Structural hash, stable within a process.
  std::size_t hash() const;
  std::uint32_t size() const;
  std::uint32_t depth() const;

  /// S-expression with base primitive names: `(take 2 (rev var0))`.
  std::string to_string() const;

  friend bool operator==(const Program& a, const Program& b);
  friend bool operator!=(const Program& a, const Program& b) { return !(a == b); }

 private:
  explicit Program(std::shared_ptr<const ProgramNode> n) : node_(std::move(n)) {}
  std::shared_ptr<const ProgramNode> node_;
};

struct ConstantPayload {
  Value value;
  Type type;
};

struct ProgramNode {
  NodeKind kind = NodeKind::Variable;
  std::uint32_t var = 0;
  std::uint32_t size = 1;
  std::uint32_t depth = 1;
  std::size_t hash = 0;
  const PrimitiveInstance* prim = nullptr;
  std::shared_ptr<const ConstantPayload> constant;
  std::vector<Program> args;
};

inline NodeKind Program::kind() const { return node_->kind; }
inline std::uint32_t Program::var_index() const { return node_->var; }
inline const PrimitiveInstance& Program::primitive() const { return *node_->prim; }
inline const Value& Program::value() const { return node_->constant->value; }
inline const Type& Program::constant_type() const { return node_->constant->type; }
inline std::span<const Program> Program::args() const { return node_->args; }
inline std::size_t Program::hash() const { return node_->hash; }
inline std::uint32_t Program::size() const { return node_->size; }
inline std::uint32_t Program::depth() const { return node_->depth; }

/// Canonical token of a single node (without its children). Tokens are
/// prefix-free, so lexicographic order on concatenated preorder tokens is
/// decided node by node.
void append_node_token(const Program& p, std::string& out);

/// Injective byte encoding: preorder concatenation of node tokens.
std::string canonical_key(const Program& p);

/// Three-way comparison agreeing with lexicographic order of canonical_key,
/// computed structurally without materializing keys.
int compare_programs(const Program& a, const Program& b);

struct ProgramHash {
  std::size_t operator()(const Program& p) const { return p.hash(); }
};

struct ProgramKeyLess {
  bool operator()(const Program& a, const Program& b) const { return compare_programs(a, b) < 0; }
};

}  // namespace dbs
