#include "sessionml/syntax.hpp"

#include <cctype>
#include <map>
#include <set>
#include <sstream>

namespace sessionml {

std::string to_string(const Span& s) {
  return std::to_string(s.line) + ":" + std::to_string(s.col);
}

SyntaxError::SyntaxError(Span s, const std::string& msg)
    : std::runtime_error(to_string(s) + ": " + msg), span(s) {}

namespace {

const std::map<std::string, Tok>& keywords() {
  static const std::map<std::string, Tok> kw = {
      {"let", Tok::Let},       {"val", Tok::Val},         {"fun", Tok::Fun},
      {"in", Tok::In},         {"end", Tok::End},         {"if", Tok::If},
      {"then", Tok::Then},     {"else", Tok::Else},       {"case", Tok::Case},
      {"spawn", Tok::Spawn},   {"request", Tok::Request}, {"accept", Tok::Accept},
      {"send", Tok::Send},     {"recv", Tok::Recv},       {"select", Tok::Select},
      {"deleg", Tok::Deleg},   {"resume", Tok::Resume},   {"fn", Tok::Fn},
      {"true", Tok::True},     {"false", Tok::False},
  };
  return kw;
}

}  // namespace

std::string tok_name(Tok t) {
  switch (t) {
    case Tok::Let: return "LET";
    case Tok::Val: return "VAL";
    case Tok::Fun: return "FUN";
    case Tok::In: return "IN";
    case Tok::End: return "END";
    case Tok::If: return "IF";
    case Tok::Then: return "THEN";
    case Tok::Else: return "ELSE";
    case Tok::Case: return "CASE";
    case Tok::Spawn: return "SPAWN";
    case Tok::Request: return "REQUEST";
    case Tok::Accept: return "ACCEPT";
    case Tok::Send: return "SEND";
    case Tok::Recv: return "RECV";
    case Tok::Select: return "SELECT";
    case Tok::Deleg: return "DELEG";
    case Tok::Resume: return "RESUME";
    case Tok::Fn: return "FN";
    case Tok::True: return "TRUE";
    case Tok::False: return "FALSE";
    case Tok::Ident: return "IDENT";
    case Tok::CLabel: return "CLABEL";
    case Tok::Int: return "INT";
    case Tok::LParen: return "LPAREN";
    case Tok::RParen: return "RPAREN";
    case Tok::LBrace: return "LBRACE";
    case Tok::RBrace: return "RBRACE";
    case Tok::Comma: return "COMMA";
    case Tok::Colon: return "COLON";
    case Tok::Semi: return "SEMI";
    case Tok::Eq: return "EQ";
    case Tok::Arrow: return "ARROW";
    case Tok::Plus: return "PLUS";
    case Tok::Minus: return "MINUS";
    case Tok::Star: return "STAR";
    case Tok::Lt: return "LT";
    case Tok::Underscore: return "UNDERSCORE";
  }
  return "?";
}

std::string to_string(const Token& t) {
  switch (t.kind) {
    case Tok::Ident:
    case Tok::CLabel: return tok_name(t.kind) + " " + t.text;
    case Tok::Int: return "INT " + std::to_string(t.value);
    default: return tok_name(t.kind);
  }
}

std::vector<Token> tokenize(const std::string& src) {
  std::vector<Token> out;
  size_t i = 0;
  int line = 1, col = 1;
  auto advance = [&](size_t n) {
    for (size_t k = 0; k < n; ++k) {
      if (src[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
      ++i;
    }
  };
  while (i < src.size()) {
    char ch = src[i];
    if (std::isspace(static_cast<unsigned char>(ch))) {
      advance(1);
      continue;
    }
    if (ch == '-' && i + 1 < src.size() && src[i + 1] == '-') {
      while (i < src.size() && src[i] != '\n') advance(1);
      continue;
    }
    Span sp{line, col};
    if (std::isdigit(static_cast<unsigned char>(ch))) {
      size_t j = i;
      while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
      if (j < src.size() && (std::isalpha(static_cast<unsigned char>(src[j])) || src[j] == '_'))
        throw SyntaxError(sp, "malformed integer literal");
      std::string digits = src.substr(i, j - i);
      if (digits.size() > 18) throw SyntaxError(sp, "integer literal out of range");
      out.push_back({Tok::Int, digits, std::stoll(digits), sp});
      advance(j - i);
      continue;
    }
    if (std::isalpha(static_cast<unsigned char>(ch)) || ch == '_') {
      size_t j = i;
      while (j < src.size() && (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_' ||
                                src[j] == '\''))
        ++j;
      std::string word = src.substr(i, j - i);
      advance(j - i);
      if (word == "_") {
        out.push_back({Tok::Underscore, word, 0, sp});
      } else if (auto it = keywords().find(word); it != keywords().end()) {
        out.push_back({it->second, word, 0, sp});
      } else if (std::isupper(static_cast<unsigned char>(word[0]))) {
        out.push_back({Tok::CLabel, word, 0, sp});
      } else {
        out.push_back({Tok::Ident, word, 0, sp});
      }
      continue;
    }
    Tok k;
    size_t len = 1;
    switch (ch) {
      case '(': k = Tok::LParen; break;
      case ')': k = Tok::RParen; break;
      case '{': k = Tok::LBrace; break;
      case '}': k = Tok::RBrace; break;
      case ',': k = Tok::Comma; break;
      case ':': k = Tok::Colon; break;
      case ';': k = Tok::Semi; break;
      case '+': k = Tok::Plus; break;
      case '-': k = Tok::Minus; break;
      case '*': k = Tok::Star; break;
      case '<': k = Tok::Lt; break;
      case '=':
        if (i + 1 < src.size() && src[i + 1] == '>') {
          k = Tok::Arrow;
          len = 2;
        } else {
          k = Tok::Eq;
        }
        break;
      default: {
        std::string shown = std::isprint(static_cast<unsigned char>(ch)) ? std::string(1, ch)
                                                                        : "\\x" + std::to_string(int(static_cast<unsigned char>(ch)));
        throw SyntaxError(sp, "illegal character '" + shown + "'");
      }
    }
    out.push_back({k, src.substr(i, len), 0, sp});
    advance(len);
  }
  return out;
}

// ---------------------------------------------------------------- constructors

namespace {

ExprP make(Expr e) { return std::make_shared<const Expr>(std::move(e)); }

}  // namespace

ExprP mk_var(std::string x, Span s) {
  Expr e{ExprTag::Var};
  e.name = std::move(x);
  e.span = s;
  return make(std::move(e));
}
ExprP mk_unit(Span s) {
  Expr e{ExprTag::Unit};
  e.span = s;
  return make(std::move(e));
}
ExprP mk_bool(bool v, Span s) {
  Expr e{ExprTag::Bool};
  e.ival = v ? 1 : 0;
  e.span = s;
  return make(std::move(e));
}
ExprP mk_int(int64_t v, Span s) {
  Expr e{ExprTag::Int};
  e.ival = v;
  e.span = s;
  return make(std::move(e));
}
ExprP mk_prim(std::string name, Span s) {
  Expr e{ExprTag::Prim};
  e.name = std::move(name);
  e.span = s;
  return make(std::move(e));
}
ExprP mk_const(ExprTag tag, std::string name, Span s) {
  Expr e{tag};
  e.name = std::move(name);
  e.span = s;
  return make(std::move(e));
}
ExprP mk_pair(ExprP a, ExprP b, Span s) {
  Expr e{ExprTag::Pair};
  e.a = std::move(a);
  e.b = std::move(b);
  e.span = s;
  return make(std::move(e));
}
ExprP mk_app(ExprP f, ExprP x, Span s) {
  Expr e{ExprTag::App};
  e.a = std::move(f);
  e.b = std::move(x);
  e.span = s;
  return make(std::move(e));
}
ExprP mk_lam(std::string x, ExprP body, Span s) {
  Expr e{ExprTag::Lam};
  e.param = std::move(x);
  e.a = std::move(body);
  e.span = s;
  return make(std::move(e));
}
ExprP mk_fix(std::string f, std::string x, ExprP body, Span s) {
  Expr e{ExprTag::Fix};
  e.fname = std::move(f);
  e.param = std::move(x);
  e.a = std::move(body);
  e.span = s;
  return make(std::move(e));
}
ExprP mk_let(std::string x, ExprP rhs, ExprP body, Span s) {
  Expr e{ExprTag::Let};
  e.param = std::move(x);
  e.a = std::move(rhs);
  e.b = std::move(body);
  e.span = s;
  return make(std::move(e));
}
ExprP mk_if(ExprP c, ExprP t, ExprP f, Span s) {
  Expr e{ExprTag::If};
  e.a = std::move(c);
  e.b = std::move(t);
  e.c = std::move(f);
  e.span = s;
  return make(std::move(e));
}
ExprP mk_spawn(ExprP x, Span s) {
  Expr e{ExprTag::Spawn};
  e.a = std::move(x);
  e.span = s;
  return make(std::move(e));
}
ExprP mk_case(ExprP x, std::vector<std::pair<std::string, ExprP>> br, Span s) {
  Expr e{ExprTag::Case};
  e.a = std::move(x);
  e.branches = std::move(br);
  e.span = s;
  return make(std::move(e));
}
ExprP mk_endpoint(uint64_t id, bool dual, uint32_t label) {
  Expr e{ExprTag::Endpoint};
  e.endpoint = id;
  e.dual = dual;
  e.label = label;
  return make(std::move(e));
}

bool is_primitive(const std::string& n) {
  static const std::set<std::string> prims = {"add", "sub", "mul", "lt", "eq", "fst", "snd", "not"};
  return prims.count(n) > 0;
}

// ---------------------------------------------------------------- parser

namespace {

struct Pattern {
  enum Kind { Name, Wild, Tuple } kind = Wild;
  std::string name;
  std::vector<Pattern> parts;
};

class Parser {
 public:
  explicit Parser(const std::vector<Token>& toks) : toks_(toks) {}

  ExprP program() {
    if (toks_.empty()) throw SyntaxError({1, 1}, "empty program; expected an expression");
    ExprP e = seq();
    if (pos_ < toks_.size()) fail({"end of input", "SEMI"});
    return e;
  }

 private:
  const std::vector<Token>& toks_;
  size_t pos_ = 0;
  int tmp_ = 0;

  bool at(Tok k) const { return pos_ < toks_.size() && toks_[pos_].kind == k; }
  Span here() const {
    if (pos_ < toks_.size()) return toks_[pos_].span;
    if (toks_.empty()) return {1, 1};
    Span s = toks_.back().span;
    s.col += static_cast<int>(toks_.back().text.size());
    return s;
  }
  [[noreturn]] void fail(std::vector<std::string> expected) const {
    std::ostringstream os;
    os << "unexpected " << (pos_ < toks_.size() ? to_string(toks_[pos_]) : std::string("end of input"))
       << "; expected one of {";
    for (size_t i = 0; i < expected.size(); ++i) os << (i ? ", " : "") << expected[i];
    os << "}";
    throw SyntaxError(here(), os.str());
  }
  const Token& expect(Tok k) {
    if (!at(k)) fail({tok_name(k)});
    return toks_[pos_++];
  }
  bool accept(Tok k) {
    if (!at(k)) return false;
    ++pos_;
    return true;
  }

  bool starts_expr() const {
    if (pos_ >= toks_.size()) return false;
    switch (toks_[pos_].kind) {
      case Tok::Let: case Tok::If: case Tok::Fn: case Tok::Case: case Tok::Spawn:
        return true;
      default:
        return starts_atom();
    }
  }

  bool starts_atom() const {
    if (pos_ >= toks_.size()) return false;
    switch (toks_[pos_].kind) {
      case Tok::Int: case Tok::True: case Tok::False: case Tok::LParen: case Tok::Ident:
      case Tok::Request: case Tok::Accept: case Tok::Send: case Tok::Recv: case Tok::Deleg:
      case Tok::Resume: case Tok::Select:
        return true;
      default:
        return false;
    }
  }

  // seq := expr (';' seq?)?
  ExprP seq() {
    Span s = here();
    ExprP e = expr();
    if (accept(Tok::Semi)) {
      if (!starts_expr()) return mk_let("_", e, mk_unit(s), s);
      return mk_let("_", e, seq(), s);
    }
    return e;
  }

  ExprP expr() {
    Span s = here();
    if (accept(Tok::Let)) return let_rest(s);
    if (accept(Tok::If)) {
      ExprP c = seq();
      expect(Tok::Then);
      ExprP t = seq();
      expect(Tok::Else);
      ExprP f = expr();
      return mk_if(c, t, f, s);
    }
    if (accept(Tok::Fn)) {
      std::string x = param();
      expect(Tok::Arrow);
      return mk_lam(x, expr(), s);
    }
    if (at(Tok::Ident) && toks_[pos_].text == "fix" && pos_ + 1 < toks_.size() &&
        toks_[pos_ + 1].kind == Tok::Ident) {
      ++pos_;
      std::string f = expect(Tok::Ident).text;
      expect(Tok::LParen);
      std::string x = param();
      expect(Tok::RParen);
      expect(Tok::Arrow);
      return mk_fix(f, x, expr(), s);
    }
    if (accept(Tok::Case)) {
      ExprP scrut = seq();
      expect(Tok::LBrace);
      std::vector<std::pair<std::string, ExprP>> br;
      std::set<std::string> seen;
      do {
        Span ls = here();
        std::string lab = expect(Tok::CLabel).text;
        if (!seen.insert(lab).second) throw SyntaxError(ls, "duplicate case label " + lab);
        expect(Tok::Colon);
        br.emplace_back(lab, seq());
        accept(Tok::Comma);
      } while (at(Tok::CLabel));
      expect(Tok::RBrace);
      return mk_case(scrut, std::move(br), s);
    }
    return compare();
  }

  std::string param() {
    if (accept(Tok::Underscore)) return "_";
    if (at(Tok::LParen) && pos_ + 1 < toks_.size() && toks_[pos_ + 1].kind == Tok::RParen) {
      pos_ += 2;
      return "_";
    }
    if (at(Tok::Ident)) {
      Span s = here();
      std::string x = toks_[pos_++].text;
      if (is_primitive(x)) throw SyntaxError(s, "cannot bind primitive name " + x);
      return x;
    }
    fail({"IDENT", "UNDERSCORE", "LPAREN"});
  }

  Pattern pattern() {
    Pattern p;
    if (accept(Tok::LParen)) {
      p.kind = Pattern::Tuple;
      p.parts.push_back(pattern());
      expect(Tok::Comma);
      p.parts.push_back(pattern());
      expect(Tok::RParen);
      return p;
    }
    std::string x = param();
    if (x == "_") return p;
    p.kind = Pattern::Name;
    p.name = x;
    return p;
  }

  struct Binding {
    Span span;
    Pattern pat;
    ExprP rhs;
  };

  ExprP let_rest(Span) {
    std::vector<Binding> bs;
    bool first = true;
    while (true) {
      Span bspan = here();
      if (accept(Tok::Fun)) {
        std::string f = expect(Tok::Ident).text;
        Pattern p;
        p.kind = Pattern::Name;
        p.name = f;
        if (accept(Tok::LParen)) {
          std::string x;
          if (at(Tok::RParen)) {
            x = "_";
          } else {
            x = param();
          }
          expect(Tok::RParen);
          expect(Tok::Eq);
          bs.push_back({bspan, p, mk_fix(f, x, expr(), bspan)});
        } else {
          expect(Tok::Eq);
          bs.push_back({bspan, p, expr()});
        }
      } else if (accept(Tok::Val) || (first && (at(Tok::Ident) || at(Tok::Underscore) || at(Tok::LParen)))) {
        Pattern p = pattern();
        expect(Tok::Eq);
        bs.push_back({bspan, p, expr()});
      } else if (first) {
        fail({"VAL", "FUN", "IDENT"});
      } else {
        break;
      }
      first = false;
      if (at(Tok::In)) break;
    }
    expect(Tok::In);
    ExprP body = seq();
    accept(Tok::End);
    for (auto it = bs.rbegin(); it != bs.rend(); ++it) body = bind(it->pat, it->rhs, body, it->span);
    return body;
  }

  ExprP bind(const Pattern& p, ExprP rhs, ExprP body, Span s) {
    switch (p.kind) {
      case Pattern::Wild: return mk_let("_", rhs, body, s);
      case Pattern::Name: return mk_let(p.name, rhs, body, s);
      case Pattern::Tuple: {
        std::string t = "tup'" + std::to_string(++tmp_);
        ExprP inner = bind(p.parts[1], mk_app(mk_prim("snd", s), mk_var(t, s), s), body, s);
        inner = bind(p.parts[0], mk_app(mk_prim("fst", s), mk_var(t, s), s), inner, s);
        return mk_let(t, rhs, inner, s);
      }
    }
    return body;
  }

  ExprP compare() {
    Span s = here();
    ExprP l = additive();
    if (accept(Tok::Lt)) return mk_app(mk_prim("lt", s), mk_pair(l, additive(), s), s);
    if (accept(Tok::Eq)) return mk_app(mk_prim("eq", s), mk_pair(l, additive(), s), s);
    return l;
  }

  ExprP additive() {
    Span s = here();
    ExprP l = multiplicative();
    while (at(Tok::Plus) || at(Tok::Minus)) {
      std::string op = at(Tok::Plus) ? "add" : "sub";
      ++pos_;
      l = mk_app(mk_prim(op, s), mk_pair(l, multiplicative(), s), s);
    }
    return l;
  }

  ExprP multiplicative() {
    Span s = here();
    ExprP l = application();
    while (accept(Tok::Star)) l = mk_app(mk_prim("mul", s), mk_pair(l, application(), s), s);
    return l;
  }

  ExprP application() {
    Span s = here();
    if (accept(Tok::Spawn)) return mk_spawn(atom(), s);
    ExprP head = atom();
    std::vector<ExprP> args;
    while (starts_atom()) args.push_back(atom());
    size_t i = 0;
    bool pairs = head->tag == ExprTag::Send || head->tag == ExprTag::Deleg;
    if (pairs && args.size() >= 2) {
      head = mk_app(head, mk_pair(args[0], args[1], s), s);
      i = 2;
    }
    for (; i < args.size(); ++i) head = mk_app(head, args[i], s);
    return head;
  }

  ExprP atom() {
    Span s = here();
    if (pos_ >= toks_.size()) fail({"expression"});
    const Token& t = toks_[pos_];
    switch (t.kind) {
      case Tok::Int: ++pos_; return mk_int(t.value, s);
      case Tok::True: ++pos_; return mk_bool(true, s);
      case Tok::False: ++pos_; return mk_bool(false, s);
      case Tok::Ident:
        ++pos_;
        if (is_primitive(t.text)) return mk_prim(t.text, s);
        return mk_var(t.text, s);
      case Tok::Request:
      case Tok::Accept: {
        ++pos_;
        std::string c = expect(Tok::Ident).text;
        return mk_const(t.kind == Tok::Request ? ExprTag::Request : ExprTag::Accept, c, s);
      }
      case Tok::Send: ++pos_; return mk_const(ExprTag::Send, {}, s);
      case Tok::Recv: ++pos_; return mk_const(ExprTag::Recv, {}, s);
      case Tok::Deleg: ++pos_; return mk_const(ExprTag::Deleg, {}, s);
      case Tok::Resume: ++pos_; return mk_const(ExprTag::Resume, {}, s);
      case Tok::Select: {
        ++pos_;
        std::string l = expect(Tok::CLabel).text;
        return mk_const(ExprTag::Select, l, s);
      }
      case Tok::LParen: {
        ++pos_;
        if (accept(Tok::RParen)) return mk_unit(s);
        ExprP e = seq();
        if (accept(Tok::Comma)) {
          ExprP r = seq();
          expect(Tok::RParen);
          return mk_pair(e, r, s);
        }
        expect(Tok::RParen);
        return e;
      }
      default:
        fail({"INT", "IDENT", "LPAREN", "TRUE", "FALSE", "REQUEST", "ACCEPT", "SEND", "RECV", "SELECT",
              "DELEG", "RESUME"});
    }
  }
};

uint32_t annotate_rec(const ExprP& e, uint32_t next, ExprP& out, bool strip);

ExprP rebuild(const ExprP& e, uint32_t& next, bool strip) {
  Expr copy = *e;
  if (e->tag == ExprTag::Request || e->tag == ExprTag::Accept || e->tag == ExprTag::Resume)
    copy.label = strip ? 0 : ++next;
  auto sub = [&](const ExprP& x) -> ExprP {
    if (!x) return x;
    ExprP r;
    next = annotate_rec(x, next, r, strip);
    return r;
  };
  copy.a = sub(e->a);
  copy.b = sub(e->b);
  copy.c = sub(e->c);
  for (auto& br : copy.branches) br.second = sub(br.second);
  return make(std::move(copy));
}

uint32_t annotate_rec(const ExprP& e, uint32_t next, ExprP& out, bool strip) {
  out = rebuild(e, next, strip);
  return next;
}

}  // namespace

ExprP parse(const std::vector<Token>& tokens) { return Parser(tokens).program(); }

ExprP parse_program(const std::string& source) { return parse(tokenize(source)); }

ExprP annotate(const ExprP& e) {
  uint32_t next = 0;
  return rebuild(e, next, false);
}

ExprP strip_labels(const ExprP& e) {
  uint32_t next = 0;
  return rebuild(e, next, true);
}

int count_label_sites(const ExprP& e) {
  if (!e) return 0;
  int n = (e->tag == ExprTag::Request || e->tag == ExprTag::Accept || e->tag == ExprTag::Resume) ? 1 : 0;
  n += count_label_sites(e->a) + count_label_sites(e->b) + count_label_sites(e->c);
  for (auto& br : e->branches) n += count_label_sites(br.second);
  return n;
}

bool structurally_equal(const ExprP& x, const ExprP& y) {
  if (x == y) return true;
  if (!x || !y) return false;
  if (x->tag != y->tag || x->name != y->name || x->ival != y->ival || x->label != y->label ||
      x->param != y->param || x->fname != y->fname || x->endpoint != y->endpoint || x->dual != y->dual ||
      x->branches.size() != y->branches.size())
    return false;
  for (size_t i = 0; i < x->branches.size(); ++i)
    if (x->branches[i].first != y->branches[i].first ||
        !structurally_equal(x->branches[i].second, y->branches[i].second))
      return false;
  return structurally_equal(x->a, y->a) && structurally_equal(x->b, y->b) && structurally_equal(x->c, y->c);
}

// Fully parenthesised concrete syntax that parses back to the same tree.
std::string pretty(const ExprP& e) {
  switch (e->tag) {
    case ExprTag::Var: return e->name;
    case ExprTag::Unit: return "()";
    case ExprTag::Bool: return e->ival ? "true" : "false";
    case ExprTag::Int: return std::to_string(e->ival);
    case ExprTag::Prim: return e->name;
    case ExprTag::Request: return "(request " + e->name + ")";
    case ExprTag::Accept: return "(accept " + e->name + ")";
    case ExprTag::Send: return "send";
    case ExprTag::Recv: return "recv";
    case ExprTag::Deleg: return "deleg";
    case ExprTag::Resume: return "resume";
    case ExprTag::Select: return "(select " + e->name + ")";
    case ExprTag::Pair: return "(" + pretty(e->a) + ", " + pretty(e->b) + ")";
    case ExprTag::App:
      if ((e->a->tag == ExprTag::Send || e->a->tag == ExprTag::Deleg) && e->b->tag != ExprTag::Pair)
        return "(" + pretty(e->a) + " (" + pretty(e->b) + "))";
      return "(" + pretty(e->a) + " " + pretty(e->b) + ")";
    case ExprTag::Lam: return "(fn " + e->param + " => " + pretty(e->a) + ")";
    case ExprTag::Fix:
      return "(fix " + e->fname + "(" + e->param + ") => " + pretty(e->a) + ")";
    case ExprTag::Let:
      return "(let val " + e->param + " = " + pretty(e->a) + " in " + pretty(e->b) + " end)";
    case ExprTag::If:
      return "(if " + pretty(e->a) + " then " + pretty(e->b) + " else " + pretty(e->c) + ")";
    case ExprTag::Spawn: return "(spawn " + pretty(e->a) + ")";
    case ExprTag::Case: {
      std::string s = "(case " + pretty(e->a) + " {";
      for (size_t i = 0; i < e->branches.size(); ++i)
        s += (i ? ", " : " ") + e->branches[i].first + ": " + pretty(e->branches[i].second);
      return s + " })";
    }
    case ExprTag::Endpoint:
      return std::string(e->dual ? "~p" : "p") + std::to_string(e->endpoint);
  }
  return "?";
}

}  // namespace sessionml
