#include "potlab/dsl/parse.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <map>
#include <optional>
#include <set>

#include "potlab/common.hpp"

namespace potlab::dsl {

namespace {

enum class Tok {
  kw_param, kw_stage, kw_when, kw_progress, kw_in, kw_and, kw_or, kw_not,
  kw_true, kw_false,
  ident, number,
  assign, lbracket, rbracket, lparen, rparen, comma, colon,
  plus, minus, star, slash, lt, le, gt, ge,
  eof,
};

struct Token {
  Tok kind;
  std::string text;
  double value = 0.0;
  int line = 1;
  int column = 1;
};

const std::map<std::string, Tok> kKeywords = {
    {"param", Tok::kw_param}, {"stage", Tok::kw_stage},   {"when", Tok::kw_when},
    {"progress", Tok::kw_progress}, {"in", Tok::kw_in},   {"and", Tok::kw_and},
    {"or", Tok::kw_or},       {"not", Tok::kw_not},       {"true", Tok::kw_true},
    {"false", Tok::kw_false},
};

const std::map<std::string, Feature> kFeatures = {
    {"dist", Feature::dist}, {"disp", Feature::disp}, {"x", Feature::x},
    {"y", Feature::y},       {"z", Feature::z},       {"dx", Feature::dx},
    {"dy", Feature::dy},     {"dz", Feature::dz},     {"spread", Feature::spread},
};

const std::map<std::string, Builtin> kBuiltins = {
    {"min", Builtin::min},   {"max", Builtin::max},   {"abs", Builtin::abs},
    {"clamp", Builtin::clamp}, {"exp", Builtin::exp}, {"tanh", Builtin::tanh},
    {"sigmoid", Builtin::sigmoid},
};

class Lexer {
public:
  explicit Lexer(const std::string& src) : src_(src) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    while (true) {
      skip_ws_and_comments();
      Token t = next_token();
      bool done = t.kind == Tok::eof;
      out.push_back(std::move(t));
      if (done) break;
    }
    return out;
  }

private:
  [[noreturn]] void fail(const std::string& msg) { throw ParseError(line_, col_, msg); }

  char peek() const { return pos_ < src_.size() ? src_[pos_] : '\0'; }
  char peek2() const { return pos_ + 1 < src_.size() ? src_[pos_ + 1] : '\0'; }

  void advance() {
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void skip_ws_and_comments() {
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (c == '#') {
        while (pos_ < src_.size() && src_[pos_] != '\n') advance();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else {
        break;
      }
    }
  }

  Token make(Tok kind, std::string text, int line, int col) {
    Token t;
    t.kind = kind;
    t.text = std::move(text);
    t.line = line;
    t.column = col;
    return t;
  }

  Token next_token() {
    if (pos_ >= src_.size()) return make(Tok::eof, "", line_, col_);
    int line = line_, col = col_;
    char c = peek();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::string word;
      while (pos_ < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_')) {
        word.push_back(peek());
        advance();
      }
      auto kw = kKeywords.find(word);
      if (kw != kKeywords.end()) return make(kw->second, word, line, col);
      return make(Tok::ident, word, line, col);
    }
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '.' && std::isdigit(static_cast<unsigned char>(peek2())))) {
      std::string num;
      while (std::isdigit(static_cast<unsigned char>(peek()))) {
        num.push_back(peek());
        advance();
      }
      if (peek() == '.') {
        num.push_back('.');
        advance();
        if (!std::isdigit(static_cast<unsigned char>(peek()))) fail("expected digits after '.'");
        while (std::isdigit(static_cast<unsigned char>(peek()))) {
          num.push_back(peek());
          advance();
        }
      }
      if (peek() == 'e' || peek() == 'E') {
        num.push_back(peek());
        advance();
        if (peek() == '+' || peek() == '-') {
          num.push_back(peek());
          advance();
        }
        if (!std::isdigit(static_cast<unsigned char>(peek()))) fail("expected exponent digits");
        while (std::isdigit(static_cast<unsigned char>(peek()))) {
          num.push_back(peek());
          advance();
        }
      }
      Token t = make(Tok::number, num, line, col);
      t.value = std::strtod(num.c_str(), nullptr);
      if (!std::isfinite(t.value)) throw ParseError(line, col, "number literal out of range");
      return t;
    }
    advance();
    switch (c) {
      case '=': return make(Tok::assign, "=", line, col);
      case '[': return make(Tok::lbracket, "[", line, col);
      case ']': return make(Tok::rbracket, "]", line, col);
      case '(': return make(Tok::lparen, "(", line, col);
      case ')': return make(Tok::rparen, ")", line, col);
      case ',': return make(Tok::comma, ",", line, col);
      case ':': return make(Tok::colon, ":", line, col);
      case '+': return make(Tok::plus, "+", line, col);
      case '-': return make(Tok::minus, "-", line, col);
      case '*': return make(Tok::star, "*", line, col);
      case '/': return make(Tok::slash, "/", line, col);
      case '<':
        if (peek() == '=') {
          advance();
          return make(Tok::le, "<=", line, col);
        }
        return make(Tok::lt, "<", line, col);
      case '>':
        if (peek() == '=') {
          advance();
          return make(Tok::ge, ">=", line, col);
        }
        return make(Tok::gt, ">", line, col);
      default:
        throw ParseError(line, col, std::string("unexpected character '") + c + "'");
    }
  }

  const std::string& src_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

enum class Type { scalar, boolean };

class Parser {
public:
  explicit Parser(std::vector<Token> tokens) : toks_(std::move(tokens)) {}

  PotentialProgram run() {
    while (!at(Tok::eof)) {
      if (at(Tok::kw_param)) {
        parse_param();
      } else if (at(Tok::kw_stage)) {
        parse_stage();
      } else {
        fail(cur(), "expected 'param' or 'stage'");
      }
    }
    if (program_.stages.empty()) fail(cur(), "program must declare at least one stage");
    const ExprPtr& g0 = program_.stages[0].guard;
    if (g0->kind != Expr::Kind::boolean || !g0->boolean)
      fail_at(g0->line, g0->column, "stage 0's guard must be the literal 'true'");
    return std::move(program_);
  }

private:
  [[noreturn]] void fail(const Token& t, const std::string& msg) {
    throw ParseError(t.line, t.column, msg);
  }
  [[noreturn]] void fail_at(int line, int col, const std::string& msg) {
    throw ParseError(line, col, msg);
  }

  const Token& cur() const { return toks_[pos_]; }
  bool at(Tok k) const { return cur().kind == k; }

  Token expect(Tok k, const std::string& what) {
    if (!at(k)) fail(cur(), "expected " + what);
    return toks_[pos_++];
  }

  bool accept(Tok k) {
    if (at(k)) {
      ++pos_;
      return true;
    }
    return false;
  }

  double parse_signed_number() {
    bool neg = accept(Tok::minus);
    Token t = expect(Tok::number, "a number");
    return neg ? -t.value : t.value;
  }

  void check_fresh_name(const Token& name) {
    if (kFeatures.count(name.text) || kBuiltins.count(name.text))
      fail(name, "'" + name.text + "' is a reserved function name");
    if (param_index_.count(name.text)) fail(name, "duplicate name '" + name.text + "'");
    if (stage_names_.count(name.text)) fail(name, "duplicate name '" + name.text + "'");
  }

  void parse_param() {
    expect(Tok::kw_param, "'param'");
    Token name = expect(Tok::ident, "a param name");
    check_fresh_name(name);
    expect(Tok::assign, "'='");
    double def = parse_signed_number();
    expect(Tok::kw_in, "'in'");
    expect(Tok::lbracket, "'['");
    double lo = parse_signed_number();
    expect(Tok::comma, "','");
    double hi = parse_signed_number();
    expect(Tok::rbracket, "']'");
    if (!(lo < hi)) fail(name, "param '" + name.text + "' needs lo < hi");
    if (def < lo || def > hi)
      fail(name, "default for param '" + name.text + "' outside [lo, hi]");
    param_index_[name.text] = static_cast<int>(program_.params.size());
    program_.params.push_back(ParamSpec{name.text, def, lo, hi});
  }

  void parse_stage() {
    expect(Tok::kw_stage, "'stage'");
    Token name = expect(Tok::ident, "a stage name");
    check_fresh_name(name);
    stage_names_.insert(name.text);
    expect(Tok::kw_when, "'when'");
    auto [guard, guard_type] = parse_expr();
    if (guard_type != Type::boolean)
      fail_at(guard->line, guard->column, "stage guard must be a boolean expression");
    expect(Tok::colon, "':'");
    expect(Tok::kw_progress, "'progress'");
    expect(Tok::assign, "'='");
    auto [progress, progress_type] = parse_expr();
    if (progress_type != Type::scalar)
      fail_at(progress->line, progress->column, "progress must be a scalar expression");
    program_.stages.push_back(Stage{name.text, std::move(guard), std::move(progress)});
  }

  using Typed = std::pair<ExprPtr, Type>;

  Typed parse_expr() { return parse_or(); }

  ExprPtr with_pos(ExprPtr e, const Token& t) {
    auto copy = std::make_shared<Expr>(*e);
    copy->line = t.line;
    copy->column = t.column;
    return copy;
  }

  Typed parse_or() {
    Typed lhs = parse_and();
    while (at(Tok::kw_or)) {
      Token op = toks_[pos_++];
      Typed rhs = parse_and();
      require_bool(lhs, op);
      require_bool(rhs, op);
      lhs = {with_pos(make_binary(BinaryOp::logic_or, lhs.first, rhs.first), op), Type::boolean};
    }
    return lhs;
  }

  Typed parse_and() {
    Typed lhs = parse_not();
    while (at(Tok::kw_and)) {
      Token op = toks_[pos_++];
      Typed rhs = parse_not();
      require_bool(lhs, op);
      require_bool(rhs, op);
      lhs = {with_pos(make_binary(BinaryOp::logic_and, lhs.first, rhs.first), op), Type::boolean};
    }
    return lhs;
  }

  Typed parse_not() {
    if (at(Tok::kw_not)) {
      Token op = toks_[pos_++];
      Typed arg = parse_not();
      require_bool(arg, op);
      return {with_pos(make_unary(UnaryOp::logic_not, arg.first), op), Type::boolean};
    }
    return parse_comparison();
  }

  Typed parse_comparison() {
    Typed lhs = parse_additive();
    if (at(Tok::lt) || at(Tok::le) || at(Tok::gt) || at(Tok::ge)) {
      Token op = toks_[pos_++];
      Typed rhs = parse_additive();
      require_scalar(lhs, op);
      require_scalar(rhs, op);
      BinaryOp b = op.kind == Tok::lt   ? BinaryOp::lt
                   : op.kind == Tok::le ? BinaryOp::le
                   : op.kind == Tok::gt ? BinaryOp::gt
                                        : BinaryOp::ge;
      return {with_pos(make_binary(b, lhs.first, rhs.first), op), Type::boolean};
    }
    return lhs;
  }

  Typed parse_additive() {
    Typed lhs = parse_multiplicative();
    while (at(Tok::plus) || at(Tok::minus)) {
      Token op = toks_[pos_++];
      Typed rhs = parse_multiplicative();
      require_scalar(lhs, op);
      require_scalar(rhs, op);
      BinaryOp b = op.kind == Tok::plus ? BinaryOp::add : BinaryOp::sub;
      lhs = {with_pos(make_binary(b, lhs.first, rhs.first), op), Type::scalar};
    }
    return lhs;
  }

  Typed parse_multiplicative() {
    Typed lhs = parse_unary();
    while (at(Tok::star) || at(Tok::slash)) {
      Token op = toks_[pos_++];
      Typed rhs = parse_unary();
      require_scalar(lhs, op);
      require_scalar(rhs, op);
      BinaryOp b = op.kind == Tok::star ? BinaryOp::mul : BinaryOp::div;
      lhs = {with_pos(make_binary(b, lhs.first, rhs.first), op), Type::scalar};
    }
    return lhs;
  }

  Typed parse_unary() {
    if (at(Tok::minus)) {
      Token op = toks_[pos_++];
      Typed arg = parse_unary();
      require_scalar(arg, op);
      return {with_pos(make_unary(UnaryOp::neg, arg.first), op), Type::scalar};
    }
    return parse_primary();
  }

  Typed parse_primary() {
    if (at(Tok::number)) {
      Token t = toks_[pos_++];
      return {with_pos(make_number(t.value), t), Type::scalar};
    }
    if (at(Tok::kw_true) || at(Tok::kw_false)) {
      Token t = toks_[pos_++];
      return {with_pos(make_boolean(t.kind == Tok::kw_true), t), Type::boolean};
    }
    if (accept(Tok::lparen)) {
      Typed inner = parse_expr();
      expect(Tok::rparen, "')'");
      return inner;
    }
    if (at(Tok::ident)) {
      Token name = toks_[pos_++];
      if (at(Tok::lparen)) return parse_call(name);
      auto it = param_index_.find(name.text);
      if (it == param_index_.end())
        fail(name, "unknown identifier '" + name.text + "' (params must be declared first)");
      return {with_pos(make_param(name.text, it->second), name), Type::scalar};
    }
    fail(cur(), "expected an expression");
  }

  Typed parse_call(const Token& name) {
    expect(Tok::lparen, "'('");
    auto feat = kFeatures.find(name.text);
    if (feat != kFeatures.end()) {
      std::vector<std::string> rois;
      if (!at(Tok::rparen)) {
        do {
          Token roi = expect(Tok::ident, "an RoI name");
          rois.push_back(roi.text);
        } while (accept(Tok::comma));
      }
      expect(Tok::rparen, "')'");
      int want = feature_arity(feat->second);
      if (static_cast<int>(rois.size()) != want)
        fail(name, std::string(feature_name(feat->second)) + " expects " +
                       std::to_string(want) + (want == 1 ? " RoI" : " RoIs"));
      return {with_pos(make_feature(feat->second, std::move(rois)), name), Type::scalar};
    }
    auto built = kBuiltins.find(name.text);
    if (built != kBuiltins.end()) {
      std::vector<ExprPtr> args;
      if (!at(Tok::rparen)) {
        do {
          Typed arg = parse_expr();
          require_scalar(arg, name);
          args.push_back(arg.first);
        } while (accept(Tok::comma));
      }
      expect(Tok::rparen, "')'");
      int want = builtin_arity(built->second);
      if (static_cast<int>(args.size()) != want)
        fail(name, std::string(builtin_name(built->second)) + " expects " +
                       std::to_string(want) + (want == 1 ? " argument" : " arguments"));
      return {with_pos(make_builtin(built->second, std::move(args)), name), Type::scalar};
    }
    fail(name, "unknown function '" + name.text + "'");
  }

  void require_scalar(const Typed& e, const Token& op) {
    if (e.second != Type::scalar)
      fail_at(e.first->line, e.first->column,
              "type error: operand of '" + op.text + "' must be scalar");
  }

  void require_bool(const Typed& e, const Token& op) {
    if (e.second != Type::boolean)
      fail_at(e.first->line, e.first->column,
              "type error: operand of '" + op.text + "' must be boolean");
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  PotentialProgram program_;
  std::map<std::string, int> param_index_;
  std::set<std::string> stage_names_;
};

}  // namespace

PotentialProgram parse(const std::string& source) {
  Lexer lexer(source);
  Parser parser(lexer.run());
  return parser.run();
}

}  // namespace potlab::dsl
