#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "abmgp/errors.hpp"
#include "abmgp/expr.hpp"

namespace abmgp {

namespace {

// Binding strength. Higher binds tighter.
constexpr int kPrecOr = 1;
constexpr int kPrecAnd = 2;
constexpr int kPrecCmp = 3;
constexpr int kPrecAdd = 4;
constexpr int kPrecMul = 5;
constexpr int kPrecUnary = 6;
constexpr int kPrecAtom = 7;

int precedence(Op op) {
  switch (op) {
    case Op::Or: return kPrecOr;
    case Op::And: return kPrecAnd;
    case Op::Add:
    case Op::Sub: return kPrecAdd;
    case Op::Mul:
    case Op::Div: return kPrecMul;
    case Op::Not:
    case Op::Neg: return kPrecUnary;
    case Op::Const:
    case Op::Var: return kPrecAtom;
    default: return kPrecCmp;
  }
}

std::string format_number(double v) {
  char buf[64];
  if (std::nearbyint(v) == v && std::fabs(v) < 1e15) {
    auto r = std::to_chars(buf, buf + sizeof buf, static_cast<long long>(v));
    return std::string(buf, r.ptr);
  }
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

struct Rendered {
  std::string text;
  int prec;
};

Rendered render_at(std::span<const Node> nodes, std::size_t& i) {
  const Node& n = nodes[i++];
  switch (n.op) {
    case Op::Const:
      return {format_number(n.value), kPrecAtom};
    case Op::Var:
      return {n.name, kPrecAtom};
    case Op::Not:
    case Op::Neg: {
      const bool child_is_const = nodes[i].op == Op::Const;
      Rendered c = render_at(nodes, i);
      // -(3) keeps negation of a literal distinct from the literal -3.
      const bool wrap = c.prec < kPrecUnary || (n.op == Op::Neg && child_is_const && c.text.front() != '-');
      if (wrap) c.text = "(" + c.text + ")";
      return {(n.op == Op::Not ? "NOT " : "-") + c.text, kPrecUnary};
    }
    default: {
      const int p = precedence(n.op);
      Rendered a = render_at(nodes, i);
      Rendered b = render_at(nodes, i);
      if (a.prec < p) a.text = "(" + a.text + ")";
      if (b.prec <= p) b.text = "(" + b.text + ")";
      std::string out;
      out.reserve(a.text.size() + b.text.size() + 6);
      out += a.text;
      out += ' ';
      out += op_symbol(n.op);
      out += ' ';
      out += b.text;
      return {std::move(out), p};
    }
  }
}

// ---------------------------------------------------------------------------

enum class Tok { Number, Ident, Sym, Keyword, End };

struct Token {
  Tok kind;
  std::string text;
  double number = 0.0;
  std::size_t pos = 0;
};

std::string upper(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

bool is_keyword(const std::string& up) {
  return up == "IF" || up == "THEN" || up == "ELSE" || up == "AND" || up == "OR" || up == "NOT";
}

std::vector<Token> lex(std::string_view s, std::size_t base) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < s.size()) {
    const char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    const std::size_t start = i;
    if (std::isdigit(static_cast<unsigned char>(c)) || (c == '.' && i + 1 < s.size() && std::isdigit(static_cast<unsigned char>(s[i + 1])))) {
      while (i < s.size() && (std::isdigit(static_cast<unsigned char>(s[i])) || s[i] == '.')) ++i;
      if (i < s.size() && (s[i] == 'e' || s[i] == 'E')) {
        std::size_t j = i + 1;
        if (j < s.size() && (s[j] == '+' || s[j] == '-')) ++j;
        if (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) {
          i = j;
          while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
        }
      }
      double v = 0.0;
      auto r = std::from_chars(s.data() + start, s.data() + i, v);
      if (r.ec != std::errc() || r.ptr != s.data() + i) throw ParseError("malformed number '" + std::string(s.substr(start, i - start)) + "'", base + start);
      out.push_back(Token{Tok::Number, std::string(s.substr(start, i - start)), v, base + start});
      continue;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      while (i < s.size() && (std::isalnum(static_cast<unsigned char>(s[i])) || s[i] == '_')) ++i;
      std::string word(s.substr(start, i - start));
      std::string up = upper(word);
      if (is_keyword(up))
        out.push_back(Token{Tok::Keyword, up, 0.0, base + start});
      else
        out.push_back(Token{Tok::Ident, word, 0.0, base + start});
      continue;
    }
    auto two = s.substr(i, 2);
    if (two == ">=" || two == "<=" || two == "==" || two == "!=") {
      out.push_back(Token{Tok::Sym, std::string(two), 0.0, base + start});
      i += 2;
      continue;
    }
    if (std::string_view("+-*/<>()=").find(c) != std::string_view::npos) {
      // A lone '=' is accepted as equality.
      out.push_back(Token{Tok::Sym, c == '=' ? "==" : std::string(1, c), 0.0, base + start});
      ++i;
      continue;
    }
    throw ParseError(std::string("unexpected character '") + c + "'", base + start);
  }
  out.push_back(Token{Tok::End, "", 0.0, base + s.size()});
  return out;
}

class Parser {
 public:
  Parser(std::vector<Token> toks, const Vocabulary& vocab) : toks_(std::move(toks)), vocab_(vocab) {}

  Rule rule() {
    if (peek_keyword("IF")) {
      ++pos_;
      Expr cond = expr();
      expect_keyword("THEN");
      Expr then_action = expr();
      std::optional<Expr> else_action;
      if (peek_keyword("ELSE")) {
        ++pos_;
        else_action = expr();
      }
      expect_end();
      return Rule::conditional(std::move(cond), std::move(then_action), std::move(else_action));
    }
    Expr e = expr();
    expect_end();
    return Rule::bare(std::move(e));
  }

  Expr whole_expr() {
    Expr e = expr();
    expect_end();
    return e;
  }

 private:
  const Token& cur() const { return toks_[pos_]; }
  bool peek_keyword(std::string_view k) const { return cur().kind == Tok::Keyword && cur().text == k; }
  bool peek_sym(std::string_view s) const { return cur().kind == Tok::Sym && cur().text == s; }

  [[noreturn]] void fail(const std::string& what) const {
    const Token& t = cur();
    throw ParseError(what + (t.kind == Tok::End ? " (end of input)" : " near '" + t.text + "'"), t.pos);
  }

  void expect_keyword(std::string_view k) {
    if (!peek_keyword(k)) fail("expected " + std::string(k));
    ++pos_;
  }
  void expect_end() {
    if (cur().kind != Tok::End) fail("unexpected trailing input");
  }

  Expr expr() { return parse_or(); }

  Expr parse_or() {
    Expr lhs = parse_and();
    while (peek_keyword("OR")) {
      ++pos_;
      lhs = Expr::binary(Op::Or, lhs, parse_and());
    }
    return lhs;
  }

  Expr parse_and() {
    Expr lhs = parse_cmp();
    while (peek_keyword("AND")) {
      ++pos_;
      lhs = Expr::binary(Op::And, lhs, parse_cmp());
    }
    return lhs;
  }

  Expr parse_cmp() {
    Expr lhs = parse_add();
    while (cur().kind == Tok::Sym) {
      auto op = op_from_symbol(cur().text);
      if (!op || !is_comparison(*op)) break;
      ++pos_;
      lhs = Expr::binary(*op, lhs, parse_add());
    }
    return lhs;
  }

  Expr parse_add() {
    Expr lhs = parse_mul();
    while (peek_sym("+") || peek_sym("-")) {
      const Op op = cur().text == "+" ? Op::Add : Op::Sub;
      ++pos_;
      lhs = Expr::binary(op, lhs, parse_mul());
    }
    return lhs;
  }

  Expr parse_mul() {
    Expr lhs = parse_unary();
    while (peek_sym("*") || peek_sym("/")) {
      const Op op = cur().text == "*" ? Op::Mul : Op::Div;
      ++pos_;
      lhs = Expr::binary(op, lhs, parse_unary());
    }
    return lhs;
  }

  Expr parse_unary() {
    if (peek_keyword("NOT")) {
      ++pos_;
      return Expr::unary(Op::Not, parse_unary());
    }
    if (peek_sym("-")) {
      ++pos_;
      if (cur().kind == Tok::Number) {
        const double v = cur().number;
        ++pos_;
        return Expr::constant(-v);
      }
      return Expr::unary(Op::Neg, parse_unary());
    }
    return parse_primary();
  }

  Expr parse_primary() {
    const Token& t = cur();
    if (t.kind == Tok::Number) {
      ++pos_;
      return Expr::constant(t.number);
    }
    if (t.kind == Tok::Ident) {
      if (vocab_ && !vocab_->contains(t.text)) throw ParseError("unknown identifier '" + t.text + "'", t.pos);
      ++pos_;
      return Expr::variable(t.text);
    }
    if (peek_sym("(")) {
      ++pos_;
      Expr e = expr();
      if (!peek_sym(")")) fail("expected ')'");
      ++pos_;
      return e;
    }
    fail("expected an operand");
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  const Vocabulary& vocab_;
};

}  // namespace

std::string render(const Expr& expr) {
  std::size_t i = 0;
  return render_at(expr.nodes(), i).text;
}

std::string render(const Rule& rule) {
  if (!rule.then_action) return render(rule.condition);
  std::string out = "IF " + render(rule.condition) + " THEN " + render(*rule.then_action);
  if (rule.else_action) out += " ELSE " + render(*rule.else_action);
  return out;
}

Expr parse_expr(std::string_view text, const Vocabulary& vocabulary) {
  return Parser(lex(text, 0), vocabulary).whole_expr();
}

Rule parse_rule(std::string_view text, const Vocabulary& vocabulary) {
  return Parser(lex(text, 0), vocabulary).rule();
}

std::vector<NamedRule> parse_rule_file(std::string_view text, const Vocabulary& vocabulary) {
  std::vector<NamedRule> out;
  std::size_t offset = 0;
  int line_no = 0;
  while (offset <= text.size()) {
    std::size_t eol = text.find('\n', offset);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(offset, eol - offset);
    const std::size_t line_start = offset;
    offset = eol + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    std::size_t b = 0;
    while (b < line.size() && std::isspace(static_cast<unsigned char>(line[b]))) ++b;
    if (b == line.size()) continue;

    // Optional `name:` prefix.
    std::string name;
    std::size_t body = b;
    std::size_t j = b;
    while (j < line.size() && (std::isalnum(static_cast<unsigned char>(line[j])) || line[j] == '_')) ++j;
    std::size_t k = j;
    while (k < line.size() && std::isspace(static_cast<unsigned char>(line[k]))) ++k;
    if (j > b && k < line.size() && line[k] == ':') {
      name = std::string(line.substr(b, j - b));
      body = k + 1;
    }
    try {
      Parser p(lex(line.substr(body), line_start + body), vocabulary);
      out.push_back(NamedRule{std::move(name), p.rule()});
    } catch (const ParseError& e) {
      throw ParseError("line " + std::to_string(line_no) + ": " + e.detail(), e.position());
    }
  }
  return out;
}

std::vector<NamedRule> read_rule_file(const std::string& path, const Vocabulary& vocabulary) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open rule file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_rule_file(ss.str(), vocabulary);
}

}  // namespace abmgp
