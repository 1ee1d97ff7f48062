#include "hyperhopf/expr.hpp"

#include <algorithm>
#include <cassert>
#include <charconv>
#include <cmath>
#include <set>
#include <sstream>

namespace hyperhopf::expr {

SyntaxError::SyntaxError(size_t offset, std::string expected)
    : Error("syntax error at offset " + std::to_string(offset) + ": expected " +
            expected),
      offset_(offset),
      expected_(std::move(expected)) {}

UnknownIdentifierError::UnknownIdentifierError(size_t offset,
                                               const std::string& name)
    : Error("unknown identifier '" + name + "' at offset " +
            std::to_string(offset)),
      offset_(offset),
      name_(name) {}

UnboundVariableError::UnboundVariableError(const std::string& name)
    : Error("unbound variable '" + name + "'"), name_(name) {}

Bindings::Bindings(std::initializer_list<std::pair<std::string, double>> init) {
  for (auto& [k, v] : init) set(k, v);
}

void Bindings::set(std::string name, double value) {
  for (auto& e : entries_)
    if (e.first == name) {
      e.second = value;
      return;
    }
  entries_.emplace_back(std::move(name), value);
}

const double* Bindings::find(const std::string& name) const {
  for (auto& e : entries_)
    if (e.first == name) return &e.second;
  return nullptr;
}

double Bindings::get(const std::string& name) const {
  if (const double* p = find(name)) return *p;
  throw UnboundVariableError(name);
}

// ---------------------------------------------------------------------------
// builders (with light constant folding; keeps high-order derivatives small)

ExprAst ExprAst::constant(double v) {
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::Constant;
  n->value = v;
  return ExprAst(std::move(n));
}

ExprAst ExprAst::variable(std::string name) {
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::Variable;
  n->name = std::move(name);
  return ExprAst(std::move(n));
}

static bool is_const(const ExprAst& e, double v) {
  return e.root() && e.root()->kind == Node::Kind::Constant &&
         e.root()->value == v;
}
static bool is_const(const ExprAst& e) {
  return e.root() && e.root()->kind == Node::Kind::Constant;
}

ExprAst ExprAst::unary(UnaryOp op, ExprAst a) {
  if (op == UnaryOp::Neg && is_const(a))
    return constant(-a.root()->value);
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::Unary;
  n->uop = op;
  n->a = a.root();
  return ExprAst(std::move(n));
}

ExprAst ExprAst::binary(BinaryOp op, ExprAst a, ExprAst b) {
  switch (op) {
    case BinaryOp::Add:
      if (is_const(a, 0)) return b;
      if (is_const(b, 0)) return a;
      if (is_const(a) && is_const(b))
        return constant(a.root()->value + b.root()->value);
      break;
    case BinaryOp::Sub:
      if (is_const(b, 0)) return a;
      if (is_const(a) && is_const(b))
        return constant(a.root()->value - b.root()->value);
      break;
    case BinaryOp::Mul:
      if (is_const(a, 0) || is_const(b, 0)) return constant(0);
      if (is_const(a, 1)) return b;
      if (is_const(b, 1)) return a;
      if (is_const(a) && is_const(b))
        return constant(a.root()->value * b.root()->value);
      break;
    case BinaryOp::Div:
      if (is_const(a, 0) && !is_const(b, 0)) return constant(0);
      if (is_const(b, 1)) return a;
      break;
  }
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::Binary;
  n->bop = op;
  n->a = a.root();
  n->b = b.root();
  return ExprAst(std::move(n));
}

ExprAst ExprAst::pow(ExprAst base, int exponent) {
  if (exponent == 0) return constant(1);
  if (exponent == 1) return base;
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::Pow;
  n->exponent = exponent;
  n->a = base.root();
  return ExprAst(std::move(n));
}

ExprAst operator+(const ExprAst& a, const ExprAst& b) {
  return ExprAst::binary(BinaryOp::Add, a, b);
}
ExprAst operator-(const ExprAst& a, const ExprAst& b) {
  return ExprAst::binary(BinaryOp::Sub, a, b);
}
ExprAst operator*(const ExprAst& a, const ExprAst& b) {
  return ExprAst::binary(BinaryOp::Mul, a, b);
}
ExprAst operator-(const ExprAst& a) {
  return ExprAst::unary(UnaryOp::Neg, a);
}

// ---------------------------------------------------------------------------
// evaluation

namespace {

double checked(double v, const char* what) {
  if (!std::isfinite(v))
    throw DomainError(std::string("non-finite result in ") + what);
  return v;
}

double ipow(double base, int e) {
  if (e < 0) {
    if (base == 0.0) throw DomainError("0 raised to a negative power");
    return 1.0 / ipow(base, -e);
  }
  double acc = 1.0, p = base;
  for (int k = e; k > 0; k >>= 1) {
    if (k & 1) acc *= p;
    p *= p;
  }
  return acc;
}

double eval_node(const Node& n, const Bindings& env) {
  switch (n.kind) {
    case Node::Kind::Constant:
      return n.value;
    case Node::Kind::Variable:
      return env.get(n.name);
    case Node::Kind::Unary: {
      const double a = eval_node(*n.a, env);
      switch (n.uop) {
        case UnaryOp::Neg:
          return -a;
        case UnaryOp::Sin:
          return std::sin(a);
        case UnaryOp::Cos:
          return std::cos(a);
        case UnaryOp::Exp:
          return checked(std::exp(a), "exp");
        case UnaryOp::Log:
          if (a <= 0) throw DomainError("log of non-positive value");
          return std::log(a);
        case UnaryOp::Sqrt:
          if (a < 0) throw DomainError("sqrt of negative value");
          return std::sqrt(a);
        case UnaryOp::Abs:
          return std::abs(a);
      }
      break;
    }
    case Node::Kind::Binary: {
      const double a = eval_node(*n.a, env);
      const double b = eval_node(*n.b, env);
      switch (n.bop) {
        case BinaryOp::Add:
          return checked(a + b, "+");
        case BinaryOp::Sub:
          return checked(a - b, "-");
        case BinaryOp::Mul:
          return checked(a * b, "*");
        case BinaryOp::Div:
          if (b == 0.0) throw DomainError("division by zero");
          return checked(a / b, "/");
      }
      break;
    }
    case Node::Kind::Pow:
      return checked(ipow(eval_node(*n.a, env), n.exponent), "^");
  }
  throw NumericsError("eval: corrupt AST");
}

}  // namespace

double ExprAst::evaluate(const Bindings& env) const {
  if (!root_) throw NumericsError("evaluate: empty expression");
  return eval_node(*root_, env);
}

// ---------------------------------------------------------------------------
// differentiation

namespace {

ExprAst diff_node(const NodePtr& n, const std::string& var) {
  const ExprAst self(n);
  switch (n->kind) {
    case Node::Kind::Constant:
      return ExprAst::constant(0);
    case Node::Kind::Variable:
      return ExprAst::constant(n->name == var ? 1 : 0);
    case Node::Kind::Unary: {
      const ExprAst a(n->a);
      const ExprAst da = diff_node(n->a, var);
      switch (n->uop) {
        case UnaryOp::Neg:
          return -da;
        case UnaryOp::Sin:
          return ExprAst::unary(UnaryOp::Cos, a) * da;
        case UnaryOp::Cos:
          return -(ExprAst::unary(UnaryOp::Sin, a) * da);
        case UnaryOp::Exp:
          return ExprAst::unary(UnaryOp::Exp, a) * da;
        case UnaryOp::Log:
          return ExprAst::binary(BinaryOp::Div, da, a);
        case UnaryOp::Sqrt:
          return ExprAst::binary(
              BinaryOp::Div, da,
              ExprAst::constant(2) * ExprAst::unary(UnaryOp::Sqrt, a));
        case UnaryOp::Abs:
          // d|u| = u/|u| * du; undefined at u = 0 and reported there.
          return ExprAst::binary(BinaryOp::Div, a,
                                 ExprAst::unary(UnaryOp::Abs, a)) *
                 da;
      }
      break;
    }
    case Node::Kind::Binary: {
      const ExprAst a(n->a), b(n->b);
      const ExprAst da = diff_node(n->a, var), db = diff_node(n->b, var);
      switch (n->bop) {
        case BinaryOp::Add:
          return da + db;
        case BinaryOp::Sub:
          return da - db;
        case BinaryOp::Mul:
          return da * b + a * db;
        case BinaryOp::Div:
          return ExprAst::binary(BinaryOp::Div, da * b - a * db,
                                 ExprAst::pow(b, 2));
      }
      break;
    }
    case Node::Kind::Pow: {
      const ExprAst a(n->a);
      const ExprAst da = diff_node(n->a, var);
      return ExprAst::constant(n->exponent) *
             ExprAst::pow(a, n->exponent - 1) * da;
    }
  }
  throw NumericsError("differentiate: corrupt AST");
}

}  // namespace

ExprAst ExprAst::differentiate(const std::string& var) const {
  if (!root_) throw NumericsError("differentiate: empty expression");
  return diff_node(root_, var);
}

// ---------------------------------------------------------------------------
// printing

namespace {

void print_node(const NodePtr& n, std::ostringstream& os) {
  switch (n->kind) {
    case Node::Kind::Constant: {
      std::ostringstream tmp;
      tmp.precision(17);
      tmp << n->value;
      std::string s = tmp.str();
      if (n->value < 0) {
        os << "(" << s << ")";
      } else {
        os << s;
      }
      return;
    }
    case Node::Kind::Variable:
      os << n->name;
      return;
    case Node::Kind::Unary: {
      const char* fn = nullptr;
      switch (n->uop) {
        case UnaryOp::Neg: {
          os << "(-";
          print_node(n->a, os);
          os << ")";
          return;
        }
        case UnaryOp::Sin: fn = "sin"; break;
        case UnaryOp::Cos: fn = "cos"; break;
        case UnaryOp::Exp: fn = "exp"; break;
        case UnaryOp::Log: fn = "log"; break;
        case UnaryOp::Sqrt: fn = "sqrt"; break;
        case UnaryOp::Abs: fn = "abs"; break;
      }
      os << fn << "(";
      print_node(n->a, os);
      os << ")";
      return;
    }
    case Node::Kind::Binary: {
      const char* op = nullptr;
      switch (n->bop) {
        case BinaryOp::Add: op = " + "; break;
        case BinaryOp::Sub: op = " - "; break;
        case BinaryOp::Mul: op = "*"; break;
        case BinaryOp::Div: op = "/"; break;
      }
      os << "(";
      print_node(n->a, os);
      os << op;
      print_node(n->b, os);
      os << ")";
      return;
    }
    case Node::Kind::Pow:
      os << "(";
      print_node(n->a, os);
      os << ")^";
      if (n->exponent < 0) {
        // printed with explicit parentheses-free sign; parser accepts it
        os << n->exponent;
      } else {
        os << n->exponent;
      }
      return;
  }
}

void collect_vars(const NodePtr& n, std::set<std::string>& out) {
  if (!n) return;
  if (n->kind == Node::Kind::Variable) out.insert(n->name);
  collect_vars(n->a, out);
  collect_vars(n->b, out);
}

}  // namespace

std::string ExprAst::to_string() const {
  if (!root_) return "";
  std::ostringstream os;
  print_node(root_, os);
  return os.str();
}

std::vector<std::string> ExprAst::variables() const {
  std::set<std::string> s;
  collect_vars(root_, s);
  return {s.begin(), s.end()};
}

// ---------------------------------------------------------------------------
// parser

namespace {

struct Token {
  enum class Type { Number, Ident, Plus, Minus, Star, Slash, Caret, LParen,
                    RParen, End } type;
  size_t offset;
  double number = 0;
  std::string text;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) { advance(); }
  const Token& peek() const { return tok_; }
  Token take() {
    Token t = tok_;
    advance();
    return t;
  }

 private:
  void advance() {
    while (pos_ < src_.size() &&
           std::isspace(static_cast<unsigned char>(src_[pos_])))
      ++pos_;
    tok_.offset = pos_;
    if (pos_ >= src_.size()) {
      tok_.type = Token::Type::End;
      return;
    }
    const char c = src_[pos_];
    auto single = [&](Token::Type t) {
      tok_.type = t;
      ++pos_;
    };
    switch (c) {
      case '+': single(Token::Type::Plus); return;
      case '-': single(Token::Type::Minus); return;
      case '*': single(Token::Type::Star); return;
      case '/': single(Token::Type::Slash); return;
      case '^': single(Token::Type::Caret); return;
      case '(': single(Token::Type::LParen); return;
      case ')': single(Token::Type::RParen); return;
      default: break;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const char* begin = src_.data() + pos_;
      const char* end = src_.data() + src_.size();
      double value = 0;
      auto res = std::from_chars(begin, end, value);
      if (res.ec != std::errc{})
        throw SyntaxError(pos_, "a numeric literal");
      tok_.type = Token::Type::Number;
      tok_.number = value;
      pos_ += static_cast<size_t>(res.ptr - begin);
      return;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      size_t start = pos_;
      while (pos_ < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[pos_])) ||
              src_[pos_] == '_'))
        ++pos_;
      tok_.type = Token::Type::Ident;
      tok_.text = std::string(src_.substr(start, pos_ - start));
      return;
    }
    throw SyntaxError(pos_, "a number, identifier or operator");
  }

  std::string_view src_;
  size_t pos_ = 0;
  Token tok_;
};

const char* kFunctions[] = {"sin", "cos", "exp", "log", "sqrt", "abs"};

class Parser {
 public:
  Parser(std::string_view src, const std::vector<std::string>& vars)
      : lex_(src), vars_(vars) {}

  ExprAst run() {
    ExprAst e = expression();
    const Token& t = lex_.peek();
    if (t.type != Token::Type::End)
      throw SyntaxError(t.offset, "end of input or an operator");
    return e;
  }

 private:
  ExprAst expression() {
    ExprAst e = term();
    for (;;) {
      const Token& t = lex_.peek();
      if (t.type == Token::Type::Plus) {
        lex_.take();
        e = e + term();
      } else if (t.type == Token::Type::Minus) {
        lex_.take();
        e = e - term();
      } else {
        return e;
      }
    }
  }

  ExprAst term() {
    ExprAst e = factor();
    for (;;) {
      const Token& t = lex_.peek();
      if (t.type == Token::Type::Star) {
        lex_.take();
        e = e * factor();
      } else if (t.type == Token::Type::Slash) {
        lex_.take();
        e = ExprAst::binary(BinaryOp::Div, e, factor());
      } else {
        return e;
      }
    }
  }

  ExprAst factor() {
    if (lex_.peek().type == Token::Type::Minus) {
      lex_.take();
      return -factor();
    }
    return power();
  }

  ExprAst power() {
    ExprAst base = atom();
    if (lex_.peek().type == Token::Type::Caret) {
      lex_.take();
      bool negative = false;
      if (lex_.peek().type == Token::Type::Minus) {
        lex_.take();
        negative = true;
      }
      const Token t = lex_.peek();
      if (t.type != Token::Type::Number)
        throw SyntaxError(t.offset, "a constant integer exponent");
      double v = t.number;
      if (v != std::floor(v) || std::abs(v) > 1e9)
        throw SyntaxError(t.offset, "a constant integer exponent");
      lex_.take();
      int e = static_cast<int>(v);
      return ExprAst::pow(base, negative ? -e : e);
    }
    return base;
  }

  ExprAst atom() {
    const Token t = lex_.peek();
    switch (t.type) {
      case Token::Type::Number:
        lex_.take();
        return ExprAst::constant(t.number);
      case Token::Type::LParen: {
        lex_.take();
        ExprAst e = expression();
        expect(Token::Type::RParen, "')'");
        return e;
      }
      case Token::Type::Ident: {
        lex_.take();
        for (size_t i = 0; i < std::size(kFunctions); ++i) {
          if (t.text == kFunctions[i]) {
            expect(Token::Type::LParen, "'(' after function name");
            ExprAst arg = expression();
            expect(Token::Type::RParen, "')'");
            static constexpr UnaryOp ops[] = {UnaryOp::Sin, UnaryOp::Cos,
                                              UnaryOp::Exp, UnaryOp::Log,
                                              UnaryOp::Sqrt, UnaryOp::Abs};
            return ExprAst::unary(ops[i], arg);
          }
        }
        if (std::find(vars_.begin(), vars_.end(), t.text) == vars_.end())
          throw UnknownIdentifierError(t.offset, t.text);
        return ExprAst::variable(t.text);
      }
      default:
        throw SyntaxError(t.offset, "a number, identifier, '(' or unary '-'");
    }
  }

  void expect(Token::Type type, const char* what) {
    const Token& t = lex_.peek();
    if (t.type != type) throw SyntaxError(t.offset, what);
    lex_.take();
  }

  Lexer lex_;
  const std::vector<std::string>& vars_;
};

}  // namespace

ExprAst parse(std::string_view source,
              const std::vector<std::string>& variables) {
  return Parser(source, variables).run();
}

// ---------------------------------------------------------------------------
// compiled form

namespace {
enum Op : int {
  kPush,
  kLoad,
  kNeg,
  kSin,
  kCos,
  kExp,
  kLog,
  kSqrt,
  kAbs,
  kAdd,
  kSub,
  kMul,
  kDiv,
  kPow
};
}

CompiledExpr::CompiledExpr(const ExprAst& e,
                           const std::vector<std::string>& slot_names,
                           const Bindings& fold) {
  if (e.empty()) throw NumericsError("CompiledExpr: empty expression");
  int depth = 0;
  const std::function<void(const NodePtr&)> emit = [&](const NodePtr& n) {
    switch (n->kind) {
      case Node::Kind::Constant:
        code_.push_back({kPush, 0, 0, n->value});
        max_stack_ = std::max(max_stack_, ++depth);
        return;
      case Node::Kind::Variable: {
        if (const double* p = fold.find(n->name)) {
          code_.push_back({kPush, 0, 0, *p});
        } else {
          auto it = std::find(slot_names.begin(), slot_names.end(), n->name);
          if (it == slot_names.end()) throw UnboundVariableError(n->name);
          code_.push_back(
              {kLoad, static_cast<int>(it - slot_names.begin()), 0, 0});
        }
        max_stack_ = std::max(max_stack_, ++depth);
        return;
      }
      case Node::Kind::Unary: {
        emit(n->a);
        static constexpr int map[] = {kNeg, kSin, kCos, kExp, kLog, kSqrt, kAbs};
        code_.push_back({map[static_cast<int>(n->uop)], 0, 0, 0});
        return;
      }
      case Node::Kind::Binary: {
        emit(n->a);
        emit(n->b);
        static constexpr int map[] = {kAdd, kSub, kMul, kDiv};
        code_.push_back({map[static_cast<int>(n->bop)], 0, 0, 0});
        --depth;
        return;
      }
      case Node::Kind::Pow:
        emit(n->a);
        code_.push_back({kPow, 0, n->exponent, 0});
        return;
    }
  };
  emit(e.root());
  if (max_stack_ > 64)
    throw NumericsError("CompiledExpr: expression nests too deeply");
}

double CompiledExpr::operator()(const double* slots) const {
  double stack[64];
  int sp = 0;
  for (const Instr& in : code_) {
    switch (in.op) {
      case kPush: stack[sp++] = in.value; break;
      case kLoad: stack[sp++] = slots[in.slot]; break;
      case kNeg: stack[sp - 1] = -stack[sp - 1]; break;
      case kSin: stack[sp - 1] = std::sin(stack[sp - 1]); break;
      case kCos: stack[sp - 1] = std::cos(stack[sp - 1]); break;
      case kExp: stack[sp - 1] = std::exp(stack[sp - 1]); break;
      case kLog:
        if (stack[sp - 1] <= 0) throw DomainError("log of non-positive value");
        stack[sp - 1] = std::log(stack[sp - 1]);
        break;
      case kSqrt:
        if (stack[sp - 1] < 0) throw DomainError("sqrt of negative value");
        stack[sp - 1] = std::sqrt(stack[sp - 1]);
        break;
      case kAbs: stack[sp - 1] = std::abs(stack[sp - 1]); break;
      case kAdd: --sp; stack[sp - 1] += stack[sp]; break;
      case kSub: --sp; stack[sp - 1] -= stack[sp]; break;
      case kMul: --sp; stack[sp - 1] *= stack[sp]; break;
      case kDiv:
        --sp;
        if (stack[sp] == 0) throw DomainError("division by zero");
        stack[sp - 1] /= stack[sp];
        break;
      case kPow: stack[sp - 1] = ipow(stack[sp - 1], in.exponent); break;
    }
  }
  return stack[0];
}

}  // namespace hyperhopf::expr
