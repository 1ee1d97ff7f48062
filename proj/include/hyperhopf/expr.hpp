#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "hyperhopf/numerics.hpp"

namespace hyperhopf::expr {

/// Failed parse: byte offset into the source plus what was expected there.
class SyntaxError : public Error {
 public:
  SyntaxError(size_t offset, std::string expected);
  size_t offset() const { return offset_; }
  const std::string& expected() const { return expected_; }

 private:
  size_t offset_;
  std::string expected_;
};

/// Identifier outside the declared variable/function set.
class UnknownIdentifierError : public Error {
 public:
  UnknownIdentifierError(size_t offset, const std::string& name);
  size_t offset() const { return offset_; }
  const std::string& name() const { return name_; }

 private:
  size_t offset_;
  std::string name_;
};

/// Evaluation outside the domain: division by zero, log of a non-positive
/// value, sqrt of a negative value, 0 raised to a negative power, or a
/// non-finite intermediate.
class DomainError : public Error {
 public:
  using Error::Error;
};

class UnboundVariableError : public Error {
 public:
  explicit UnboundVariableError(const std::string& name);
  const std::string& name() const { return name_; }

 private:
  std::string name_;
};

/// Variable bindings for evaluation; a small flat name->value map.
class Bindings {
 public:
  Bindings() = default;
  Bindings(std::initializer_list<std::pair<std::string, double>> init);
  void set(std::string name, double value);
  double get(const std::string& name) const;  // throws UnboundVariableError
  const double* find(const std::string& name) const;
  size_t size() const { return entries_.size(); }
  const std::vector<std::pair<std::string, double>>& entries() const {
    return entries_;
  }

 private:
  std::vector<std::pair<std::string, double>> entries_;
};

enum class UnaryOp { Neg, Sin, Cos, Exp, Log, Sqrt, Abs };
enum class BinaryOp { Add, Sub, Mul, Div };

struct Node;
using NodePtr = std::shared_ptr<const Node>;

/// One immutable AST node. Trees are shared freely; nothing mutates them.
struct Node {
  enum class Kind { Constant, Variable, Unary, Binary, Pow };
  Kind kind;
  double value = 0;       // Constant
  std::string name;       // Variable
  UnaryOp uop{};          // Unary
  BinaryOp bop{};         // Binary
  int exponent = 0;       // Pow (constant integer exponent)
  NodePtr a, b;           // children
};

/// Arithmetic expression over named real variables, closed under symbolic
/// differentiation. Supported: + - * / unary minus, integer ^, and
/// sin, cos, exp, log, sqrt, abs.
class ExprAst {
 public:
  ExprAst() = default;
  explicit ExprAst(NodePtr root) : root_(std::move(root)) {}

  static ExprAst constant(double v);
  static ExprAst variable(std::string name);
  static ExprAst unary(UnaryOp op, ExprAst a);
  static ExprAst binary(BinaryOp op, ExprAst a, ExprAst b);
  static ExprAst pow(ExprAst base, int exponent);

  bool empty() const { return !root_; }
  const NodePtr& root() const { return root_; }

  double evaluate(const Bindings& env) const;
  ExprAst differentiate(const std::string& var) const;
  std::string to_string() const;

  /// Free variables actually referenced by the tree.
  std::vector<std::string> variables() const;

 private:
  NodePtr root_;
};

ExprAst operator+(const ExprAst& a, const ExprAst& b);
ExprAst operator-(const ExprAst& a, const ExprAst& b);
ExprAst operator*(const ExprAst& a, const ExprAst& b);
ExprAst operator-(const ExprAst& a);

/// Parse `source` over the declared variable set.
///
/// Grammar (documented in README):
///   expr   := term (('+'|'-') term)*
///   term   := factor (('*'|'/') factor)*
///   factor := '-' factor | power
///   power  := atom ('^' ['-'] integer)?
///   atom   := number | ident | func '(' expr ')' | '(' expr ')'
/// '^' binds tightest, then unary minus, then '*'/'/', then '+'/'-';
/// whitespace is insignificant. Exponents are constant integers.
ExprAst parse(std::string_view source,
              const std::vector<std::string>& variables);

/// Postfix-compiled form of an ExprAst for hot evaluation loops. Variable
/// slots are fixed at compile time; `fold` entries become constants.
class CompiledExpr {
 public:
  CompiledExpr() = default;
  CompiledExpr(const ExprAst& e, const std::vector<std::string>& slot_names,
               const Bindings& fold = {});
  /// slots[i] binds slot_names[i]. No allocation; safe for concurrent use.
  double operator()(const double* slots) const;
  bool valid() const { return !code_.empty(); }

 private:
  struct Instr {
    int op;       // opcode
    int slot;     // variable slot
    int exponent; // Pow
    double value; // Constant
  };
  std::vector<Instr> code_;
  int max_stack_ = 0;
};

}  // namespace hyperhopf::expr
