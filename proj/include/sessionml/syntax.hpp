// Source language: tokens, expressions, parser and label annotation.
#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace sessionml {

struct Span {
  int line = 0;
  int col = 0;
};

std::string to_string(const Span& s);

enum class Tok {
  Let, Val, Fun, In, End, If, Then, Else, Case, Spawn, Request, Accept,
  Send, Recv, Select, Deleg, Resume, Fn, True, False,
  Ident, CLabel, Int,
  LParen, RParen, LBrace, RBrace, Comma, Colon, Semi, Eq, Arrow,
  Plus, Minus, Star, Lt, Underscore,
};

struct Token {
  Tok kind;
  std::string text;
  int64_t value = 0;
  Span span;
};

std::string tok_name(Tok t);
std::string to_string(const Token& t);

struct SyntaxError : std::runtime_error {
  Span span;
  SyntaxError(Span s, const std::string& msg);
};

std::vector<Token> tokenize(const std::string& source);

enum class ExprTag {
  Var, Unit, Bool, Int, Prim,
  Request, Accept, Send, Recv, Select, Deleg, Resume,
  Pair, App, Lam, Fix, Let, If, Spawn, Case, Endpoint,
};

struct Expr;
using ExprP = std::shared_ptr<const Expr>;

struct Expr {
  ExprTag tag;
  // Var: variable; Prim: primitive name; Request/Accept: channel; Select: choice label.
  std::string name;
  int64_t ival = 0;
  // Source label of request/accept/resume, 0 until annotated. Endpoint: label of its source.
  uint32_t label = 0;
  // Lam/Fix parameter and Fix function name; Let binder ("_" for a wildcard).
  std::string param, fname;
  ExprP a, b, c;
  std::vector<std::pair<std::string, ExprP>> branches;
  // Endpoint literal: runtime identity and polarity.
  uint64_t endpoint = 0;
  bool dual = false;
  Span span;
};

ExprP mk_var(std::string x, Span s = {});
ExprP mk_unit(Span s = {});
ExprP mk_bool(bool v, Span s = {});
ExprP mk_int(int64_t v, Span s = {});
ExprP mk_prim(std::string name, Span s = {});
ExprP mk_const(ExprTag tag, std::string name = {}, Span s = {});
ExprP mk_pair(ExprP a, ExprP b, Span s = {});
ExprP mk_app(ExprP f, ExprP x, Span s = {});
ExprP mk_lam(std::string x, ExprP body, Span s = {});
ExprP mk_fix(std::string f, std::string x, ExprP body, Span s = {});
ExprP mk_let(std::string x, ExprP rhs, ExprP body, Span s = {});
ExprP mk_if(ExprP c, ExprP t, ExprP e, Span s = {});
ExprP mk_spawn(ExprP e, Span s = {});
ExprP mk_case(ExprP e, std::vector<std::pair<std::string, ExprP>> br, Span s = {});
ExprP mk_endpoint(uint64_t id, bool dual, uint32_t label);

// Primitive functions available by name.
bool is_primitive(const std::string& name);

ExprP parse(const std::vector<Token>& tokens);
ExprP parse_program(const std::string& source);

// Assigns fresh labels l1, l2, ... to request/accept/resume occurrences, left to right.
ExprP annotate(const ExprP& e);
ExprP strip_labels(const ExprP& e);
int count_label_sites(const ExprP& e);

bool structurally_equal(const ExprP& x, const ExprP& y);
std::string pretty(const ExprP& e);

}  // namespace sessionml
