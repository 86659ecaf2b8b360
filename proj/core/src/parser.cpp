// Part of decov, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0

#include "decov/parser.hpp"

#include <cctype>
#include <unordered_set>

namespace decov {
namespace {

enum class Tok {
  End,
  Newline,
  Name,
  Int,
  Float,
  Str,
  Kw,      // keyword; text holds which
  Punct,   // one of { } ( ) , ; :
  Op,      // = == != < <= > >= + - * / %
};

struct Token {
  Tok kind;
  std::string text;
  long long int_val = 0;
  double float_val = 0.0;
  int line = 1;
  int col = 1;
};

const std::unordered_set<std::string> kKeywords = {
    "if",   "elif",  "else",   "while", "for",  "in",    "range",
    "match", "case", "def",    "return", "raise", "try",  "except",
    "pass", "print", "load",   "and",   "or",   "not",   "True",
    "False", "None"};

class Lexer {
 public:
  Lexer(const std::string& src, const std::string& file) : src_(src), file_(file) {
    // normalize CRLF
    std::string out;
    out.reserve(src_.size());
    for (size_t i = 0; i < src_.size(); ++i) {
      if (src_[i] == '\r' && i + 1 < src_.size() && src_[i + 1] == '\n') continue;
      if (src_[i] == '\r') { out.push_back('\n'); continue; }
      out.push_back(src_[i]);
    }
    src_ = out;
    tokenize();
  }

  std::vector<Token> tokens;

 private:
  [[noreturn]] void fail(const std::string& msg) { throw ParseError(msg, line_, col_); }

  void push(Tok k, std::string text) {
    Token t;
    t.kind = k;
    t.text = std::move(text);
    t.line = tok_line_;
    t.col = tok_col_;
    tokens.push_back(std::move(t));
  }

  char peek(size_t ahead = 0) const {
    return pos_ + ahead < src_.size() ? src_[pos_ + ahead] : '\0';
  }

  char advance() {
    char c = src_[pos_++];
    if (c == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    return c;
  }

  void tokenize() {
    while (pos_ < src_.size()) {
      tok_line_ = line_;
      tok_col_ = col_;
      char c = peek();
      if (c == '\n') {
        advance();
        if (!tokens.empty() && tokens.back().kind != Tok::Newline)
          push(Tok::Newline, "\n");
        continue;
      }
      if (c == ' ' || c == '\t') { advance(); continue; }
      if (c == '#') {
        while (pos_ < src_.size() && peek() != '\n') advance();
        continue;
      }
      if (std::isalpha((unsigned char)c) || c == '_') {
        std::string word;
        while (std::isalnum((unsigned char)peek()) || peek() == '_') word.push_back(advance());
        if (kKeywords.count(word)) {
          push(Tok::Kw, word);
        } else {
          if (word == "_branch") fail("'_branch' is a reserved identifier");
          push(Tok::Name, word);
        }
        continue;
      }
      if (std::isdigit((unsigned char)c)) {
        std::string num;
        while (std::isdigit((unsigned char)peek())) num.push_back(advance());
        if (peek() == '.' && std::isdigit((unsigned char)peek(1))) {
          num.push_back(advance());
          while (std::isdigit((unsigned char)peek())) num.push_back(advance());
          Token t;
          t.kind = Tok::Float;
          t.text = num;
          t.float_val = std::stod(num);
          t.line = tok_line_;
          t.col = tok_col_;
          tokens.push_back(std::move(t));
        } else {
          Token t;
          t.kind = Tok::Int;
          t.text = num;
          try {
            t.int_val = std::stoll(num);
          } catch (const std::out_of_range&) {
            fail("integer literal out of range");
          }
          t.line = tok_line_;
          t.col = tok_col_;
          tokens.push_back(std::move(t));
        }
        continue;
      }
      if (c == '"') {
        advance();
        std::string s;
        while (true) {
          if (pos_ >= src_.size() || peek() == '\n') fail("unterminated string literal");
          char ch = advance();
          if (ch == '"') break;
          if (ch == '\\') {
            char esc = advance();
            switch (esc) {
              case 'n': s.push_back('\n'); break;
              case 't': s.push_back('\t'); break;
              case '\\': s.push_back('\\'); break;
              case '"': s.push_back('"'); break;
              default: fail("unknown escape sequence");
            }
          } else {
            s.push_back(ch);
          }
        }
        Token t;
        t.kind = Tok::Str;
        t.text = s;
        t.line = tok_line_;
        t.col = tok_col_;
        tokens.push_back(std::move(t));
        continue;
      }
      switch (c) {
        case '{': case '}': case '(': case ')': case ',': case ';': case ':':
          advance();
          push(Tok::Punct, std::string(1, c));
          continue;
        case '=':
          advance();
          if (peek() == '=') { advance(); push(Tok::Op, "=="); }
          else push(Tok::Op, "=");
          continue;
        case '!':
          advance();
          if (peek() == '=') { advance(); push(Tok::Op, "!="); }
          else fail("unexpected '!'");
          continue;
        case '<':
          advance();
          if (peek() == '=') { advance(); push(Tok::Op, "<="); }
          else push(Tok::Op, "<");
          continue;
        case '>':
          advance();
          if (peek() == '=') { advance(); push(Tok::Op, ">="); }
          else push(Tok::Op, ">");
          continue;
        case '+': case '-': case '*': case '/': case '%':
          advance();
          push(Tok::Op, std::string(1, c));
          continue;
        default:
          fail(std::string("unexpected character '") + c + "'");
      }
    }
    tok_line_ = line_;
    tok_col_ = col_;
    push(Tok::End, "");
  }

  std::string src_;
  std::string file_;
  size_t pos_ = 0;
  int line_ = 1, col_ = 1;
  int tok_line_ = 1, tok_col_ = 1;
};

constexpr int kMaxNesting = 64;

class Parser {
 public:
  Parser(std::vector<Token> toks, std::string file)
      : toks_(std::move(toks)), file_(std::move(file)) {}

  AstPtr parse_module() {
    auto mod = make_node(NodeKind::Module, {file_, 1});
    skip_newlines();
    while (!at(Tok::End)) {
      mod->body.push_back(statement());
      skip_newlines();
    }
    return mod;
  }

 private:
  const Token& cur() const { return toks_[pos_]; }
  const Token& peek_tok(size_t n = 1) const {
    return toks_[std::min(pos_ + n, toks_.size() - 1)];
  }
  bool at(Tok k) const { return cur().kind == k; }
  bool at_kw(const char* w) const { return cur().kind == Tok::Kw && cur().text == w; }
  bool at_punct(const char* w) const { return cur().kind == Tok::Punct && cur().text == w; }
  bool at_op(const char* w) const { return cur().kind == Tok::Op && cur().text == w; }

  Token eat() { return toks_[pos_++]; }

  [[noreturn]] void fail(const std::string& msg) {
    throw ParseError(msg, cur().line, cur().col);
  }

  Token expect_punct(const char* w) {
    if (!at_punct(w)) fail(std::string("expected '") + w + "'");
    return eat();
  }

  Token expect_kw(const char* w) {
    if (!at_kw(w)) fail(std::string("expected '") + w + "'");
    return eat();
  }

  void skip_newlines() {
    while (at(Tok::Newline)) eat();
  }

  void end_of_stmt() {
    if (at_punct(";")) { eat(); return; }
    if (at(Tok::Newline)) { eat(); return; }
    if (at(Tok::End) || at_punct("}")) return;
    fail("expected end of statement");
  }

  SourcePosition here() const { return {file_, cur().line}; }

  struct DepthGuard {
    explicit DepthGuard(Parser& p) : p(p) {
      if (++p.depth_ > kMaxNesting) throw ParseError("nesting too deep", p.cur().line, p.cur().col);
    }
    ~DepthGuard() { --p.depth_; }
    Parser& p;
  };

  std::vector<AstPtr> block() {
    DepthGuard g(*this);
    expect_punct("{");
    std::vector<AstPtr> stmts;
    skip_newlines();
    while (!at_punct("}")) {
      if (at(Tok::End)) fail("unterminated block");
      stmts.push_back(statement());
      skip_newlines();
    }
    eat();  // '}'
    return stmts;
  }

  AstPtr statement() {
    if (at_kw("if")) return if_stmt();
    if (at_kw("while")) return while_stmt();
    if (at_kw("for")) return for_stmt();
    if (at_kw("match")) return match_stmt();
    if (at_kw("def")) return def_stmt();
    if (at_kw("try")) return try_stmt();
    return simple_stmt_line();
  }

  // A simple statement followed by its terminator.
  AstPtr simple_stmt_line() {
    auto s = simple_stmt();
    end_of_stmt();
    return s;
  }

  AstPtr simple_stmt() {
    auto pos = here();
    if (at_kw("pass")) { eat(); return make_node(NodeKind::Pass, pos); }
    if (at_kw("raise")) { eat(); return make_node(NodeKind::Raise, pos); }
    if (at_kw("return")) {
      eat();
      auto n = make_node(NodeKind::Return, pos);
      if (!at(Tok::Newline) && !at(Tok::End) && !at_punct(";") && !at_punct("}"))
        n->test = expression();
      return n;
    }
    if (at_kw("print")) {
      eat();
      expect_punct("(");
      auto n = make_node(NodeKind::Print, pos);
      n->test = expression();
      expect_punct(")");
      return n;
    }
    if (at_kw("load")) {
      eat();
      expect_punct("(");
      if (!at(Tok::Str)) fail("load() takes a string literal");
      auto n = make_node(NodeKind::Load, pos);
      n->str_val = eat().text;
      expect_punct(")");
      return n;
    }
    if (at(Tok::Name) && peek_tok().kind == Tok::Op && peek_tok().text == "=") {
      auto n = make_node(NodeKind::Assign, pos);
      n->name = eat().text;
      eat();  // '='
      n->test = expression();
      return n;
    }
    auto n = make_node(NodeKind::ExprStmt, pos);
    n->test = expression();
    return n;
  }

  AstPtr if_stmt() {
    auto pos = here();
    eat();  // if
    auto n = make_node(NodeKind::If, pos);
    n->test = expression();
    if (at_punct(":")) {  // single-line form: `if expr: stmt`
      eat();
      n->body.push_back(simple_stmt());
      end_of_stmt();
      return n;
    }
    n->body = block();
    skip_newlines();
    if (at_kw("elif")) {
      // desugar to a nested If in the else arm; the elif keeps its own line
      auto inner_pos = here();
      eat();
      auto inner = make_node(NodeKind::If, inner_pos);
      inner->test = expression();
      inner->body = block();
      skip_newlines();
      n->orelse.push_back(finish_elif_chain(inner));
      return n;
    }
    if (at_kw("else")) {
      eat();
      n->orelse = block();
    }
    return n;
  }

  AstPtr finish_elif_chain(AstPtr inner) {
    skip_newlines();
    if (at_kw("elif")) {
      auto pos = here();
      eat();
      auto next = make_node(NodeKind::If, pos);
      next->test = expression();
      next->body = block();
      inner->orelse.push_back(finish_elif_chain(next));
      return inner;
    }
    if (at_kw("else")) {
      eat();
      inner->orelse = block();
    }
    return inner;
  }

  AstPtr while_stmt() {
    auto pos = here();
    eat();
    auto n = make_node(NodeKind::While, pos);
    n->test = expression();
    n->body = block();
    skip_newlines();
    if (at_kw("else")) {
      eat();
      n->orelse = block();
    }
    return n;
  }

  AstPtr for_stmt() {
    auto pos = here();
    eat();
    auto n = make_node(NodeKind::ForRange, pos);
    if (!at(Tok::Name)) fail("expected loop variable name");
    n->name = eat().text;
    expect_kw("in");
    expect_kw("range");
    expect_punct("(");
    n->test = expression();
    expect_punct(")");
    n->body = block();
    skip_newlines();
    if (at_kw("else")) {
      eat();
      n->orelse = block();
    }
    return n;
  }

  AstPtr match_stmt() {
    auto pos = here();
    eat();
    auto n = make_node(NodeKind::Match, pos);
    n->test = expression();
    DepthGuard g(*this);
    expect_punct("{");
    skip_newlines();
    while (!at_punct("}")) {
      if (!at_kw("case")) fail("expected 'case'");
      auto cpos = here();
      eat();
      auto c = make_node(NodeKind::Case, cpos);
      if (at(Tok::Name) && cur().text == "_") {
        eat();  // wildcard
      } else {
        c->test = case_literal();
      }
      c->body = block();
      n->cases.push_back(c);
      skip_newlines();
    }
    eat();  // '}'
    return n;
  }

  AstPtr case_literal() {
    auto pos = here();
    bool neg = false;
    if (at_op("-")) { eat(); neg = true; }
    if (at(Tok::Int)) {
      auto n = make_node(NodeKind::IntLit, pos);
      n->int_val = eat().int_val;
      if (neg) n->int_val = -n->int_val;
      return n;
    }
    if (at(Tok::Float)) {
      auto n = make_node(NodeKind::FloatLit, pos);
      n->float_val = eat().float_val;
      if (neg) n->float_val = -n->float_val;
      return n;
    }
    if (neg) fail("expected numeric literal after '-'");
    if (at(Tok::Str)) {
      auto n = make_node(NodeKind::StrLit, pos);
      n->str_val = eat().text;
      return n;
    }
    if (at_kw("True") || at_kw("False")) {
      auto n = make_node(NodeKind::BoolLit, pos);
      n->bool_val = eat().text == "True";
      return n;
    }
    if (at_kw("None")) {
      eat();
      return make_node(NodeKind::NoneLit, pos);
    }
    fail("expected literal case pattern or '_'");
  }

  AstPtr def_stmt() {
    auto pos = here();
    eat();
    auto n = make_node(NodeKind::FunctionDef, pos);
    if (!at(Tok::Name)) fail("expected function name");
    n->name = eat().text;
    expect_punct("(");
    while (!at_punct(")")) {
      if (!at(Tok::Name)) fail("expected parameter name");
      n->params.push_back(eat().text);
      if (at_punct(",")) eat();
      else if (!at_punct(")")) fail("expected ',' or ')'");
    }
    eat();  // ')'
    n->body = block();
    return n;
  }

  AstPtr try_stmt() {
    auto pos = here();
    eat();
    auto n = make_node(NodeKind::Try, pos);
    n->body = block();
    skip_newlines();
    if (!at_kw("except")) fail("expected 'except'");
    n->handler_line = cur().line;
    eat();
    n->orelse = block();
    return n;
  }

  // --- expressions ---

  AstPtr expression() {
    DepthGuard g(*this);
    return or_expr();
  }

  AstPtr or_expr() {
    auto lhs = and_expr();
    while (at_kw("or")) {
      auto pos = lhs->pos;
      eat();
      auto n = make_node(NodeKind::BoolOp, pos);
      n->op = (int)BoolKind::Or;
      n->children = {lhs, and_expr()};
      lhs = n;
    }
    return lhs;
  }

  AstPtr and_expr() {
    auto lhs = not_expr();
    while (at_kw("and")) {
      auto pos = lhs->pos;
      eat();
      auto n = make_node(NodeKind::BoolOp, pos);
      n->op = (int)BoolKind::And;
      n->children = {lhs, not_expr()};
      lhs = n;
    }
    return lhs;
  }

  AstPtr not_expr() {
    if (at_kw("not")) {
      auto pos = here();
      eat();
      auto n = make_node(NodeKind::Unary, pos);
      n->op = (int)UnOp::Not;
      n->children = {not_expr()};
      return n;
    }
    return comparison();
  }

  AstPtr comparison() {
    auto lhs = arith();
    static const std::pair<const char*, CmpOp> ops[] = {
        {"==", CmpOp::Eq}, {"!=", CmpOp::Ne}, {"<=", CmpOp::Le},
        {"<", CmpOp::Lt},  {">=", CmpOp::Ge}, {">", CmpOp::Gt}};
    for (auto& [text, op] : ops) {
      if (at_op(text)) {
        eat();
        auto n = make_node(NodeKind::Compare, lhs->pos);
        n->op = (int)op;
        n->children = {lhs, arith()};
        return n;  // no chained comparisons
      }
    }
    return lhs;
  }

  AstPtr arith() {
    auto lhs = term();
    while (at_op("+") || at_op("-")) {
      BinOp op = cur().text == "+" ? BinOp::Add : BinOp::Sub;
      eat();
      auto n = make_node(NodeKind::Binary, lhs->pos);
      n->op = (int)op;
      n->children = {lhs, term()};
      lhs = n;
    }
    return lhs;
  }

  AstPtr term() {
    auto lhs = factor();
    while (at_op("*") || at_op("/") || at_op("%")) {
      BinOp op = cur().text == "*" ? BinOp::Mul
               : cur().text == "/" ? BinOp::Div
                                   : BinOp::Mod;
      eat();
      auto n = make_node(NodeKind::Binary, lhs->pos);
      n->op = (int)op;
      n->children = {lhs, factor()};
      lhs = n;
    }
    return lhs;
  }

  AstPtr factor() {
    if (at_op("-")) {
      auto pos = here();
      eat();
      auto n = make_node(NodeKind::Unary, pos);
      n->op = (int)UnOp::Neg;
      n->children = {factor()};
      return n;
    }
    return atom();
  }

  AstPtr atom() {
    DepthGuard g(*this);
    auto pos = here();
    if (at(Tok::Int)) {
      auto n = make_node(NodeKind::IntLit, pos);
      n->int_val = eat().int_val;
      return n;
    }
    if (at(Tok::Float)) {
      auto n = make_node(NodeKind::FloatLit, pos);
      n->float_val = eat().float_val;
      return n;
    }
    if (at(Tok::Str)) {
      auto n = make_node(NodeKind::StrLit, pos);
      n->str_val = eat().text;
      return n;
    }
    if (at_kw("True") || at_kw("False")) {
      auto n = make_node(NodeKind::BoolLit, pos);
      n->bool_val = eat().text == "True";
      return n;
    }
    if (at_kw("None")) {
      eat();
      return make_node(NodeKind::NoneLit, pos);
    }
    if (at(Tok::Name)) {
      auto n = make_node(NodeKind::Name, pos);
      n->name = eat().text;
      if (at_punct("(")) {
        eat();
        auto call = make_node(NodeKind::Call, pos);
        call->name = n->name;
        while (!at_punct(")")) {
          call->children.push_back(expression());
          if (at_punct(",")) eat();
          else if (!at_punct(")")) fail("expected ',' or ')'");
        }
        eat();
        return call;
      }
      return n;
    }
    if (at_punct("(")) {
      eat();
      auto first = expression();
      if (at_punct(",")) {
        auto tup = make_node(NodeKind::TupleExpr, pos);
        tup->children.push_back(first);
        while (at_punct(",")) {
          eat();
          if (at_punct(")")) break;  // trailing comma
          tup->children.push_back(expression());
        }
        expect_punct(")");
        return tup;
      }
      expect_punct(")");
      return first;
    }
    fail("expected expression");
  }

  std::vector<Token> toks_;
  std::string file_;
  size_t pos_ = 0;
  int depth_ = 0;
};

}  // namespace

AstPtr parse(const std::string& source, const std::string& file) {
  Lexer lex(source, file);
  Parser p(std::move(lex.tokens), file);
  return p.parse_module();
}

}  // namespace decov
