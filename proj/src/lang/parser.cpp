#include <algorithm>
#include <cctype>
#include <charconv>

#include "netqre/lang.hpp"

namespace netqre {

ParseError::ParseError(const std::string& what, int line, int column)
    : std::runtime_error(std::to_string(line) + ":" + std::to_string(column) + ": " + what),
      line_(line),
      column_(column) {}

namespace {

class Parser {
 public:
  Parser(std::string_view text, const TraceManifest& m) : src_(text), manifest_(m) {}

  ParseResult top() {
    skip();
    if (at_end()) fail("expected a program, found end of input");
    Item root = item();
    skip();
    if (!at_end() && peek() == '>') {
      ++pos_;
      skip();
      double t = number();
      skip();
      if (!at_end()) fail("trailing input after threshold");
      return Classifier{root.node, t, Interval::point(t)};
    }
    if (!at_end()) fail("trailing input after program");
    return root.node;
  }

 private:
  struct Item {
    Ast node;
    bool is_split;  // Split node or <program>/<split> hole
  };

  // ------------------------------------------------------------ lexing

  bool at_end() const { return pos_ >= src_.size(); }
  char peek(std::size_t ahead = 0) const {
    return pos_ + ahead < src_.size() ? src_[pos_ + ahead] : '\0';
  }

  void skip() {
    while (!at_end() && std::isspace(static_cast<unsigned char>(peek()))) ++pos_;
  }

  [[noreturn]] void fail(const std::string& what) const {
    int line = 1, col = 1;
    for (std::size_t i = 0; i < pos_ && i < src_.size(); ++i) {
      if (src_[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ParseError(what, line, col);
  }

  bool accept(std::string_view s) {
    skip();
    if (src_.substr(pos_, s.size()) == s) {
      pos_ += s.size();
      return true;
    }
    return false;
  }

  void expect(std::string_view s) {
    if (!accept(s)) fail("expected '" + std::string(s) + "'");
  }

  bool looking_at(std::string_view s) {
    skip();
    return src_.substr(pos_, s.size()) == s;
  }

  std::string ident() {
    skip();
    std::size_t start = pos_;
    while (!at_end()) {
      char c = peek();
      if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.')
        ++pos_;
      else
        break;
    }
    if (start == pos_) fail("expected an identifier");
    return std::string(src_.substr(start, pos_ - start));
  }

  std::uint64_t integer() {
    skip();
    std::uint64_t v = 0;
    auto res = std::from_chars(src_.data() + pos_, src_.data() + src_.size(), v);
    if (res.ec != std::errc()) fail("expected an integer");
    pos_ = static_cast<std::size_t>(res.ptr - src_.data());
    return v;
  }

  double number() {
    skip();
    bool neg = accept("-");
    skip();
    double v = 0;
    auto res = std::from_chars(src_.data() + pos_, src_.data() + src_.size(), v);
    if (res.ec != std::errc()) fail("expected a number");
    pos_ = static_cast<std::size_t>(res.ptr - src_.data());
    if (peek() == '/') {
      ++pos_;
      double d = 0;
      auto r2 = std::from_chars(src_.data() + pos_, src_.data() + src_.size(), d);
      if (r2.ec != std::errc() || d == 0) fail("malformed rational");
      pos_ = static_cast<std::size_t>(r2.ptr - src_.data());
      v /= d;
    }
    return neg ? -v : v;
  }

  /// Decimal text followed by '%', converted exactly to a dyadic fraction.
  Percentile percentile() {
    skip();
    std::size_t start = pos_;
    std::uint64_t digits = 0;
    unsigned decimals = 0;
    bool seen_dot = false, any = false;
    while (!at_end()) {
      char c = peek();
      if (std::isdigit(static_cast<unsigned char>(c))) {
        if (digits > (std::uint64_t{1} << 50)) fail("malformed percentile");
        digits = digits * 10 + static_cast<std::uint64_t>(c - '0');
        if (seen_dot) ++decimals;
        any = true;
        ++pos_;
      } else if (c == '.' && !seen_dot) {
        seen_dot = true;
        ++pos_;
      } else {
        break;
      }
    }
    if (!any || peek() != '%') {
      pos_ = start;
      fail("malformed percentile");
    }
    ++pos_;
    // value = digits / (100 * 10^decimals); find the smallest 2^e making it integral.
    std::uint64_t den = 100;
    for (unsigned i = 0; i < decimals; ++i) den *= 10;
    for (unsigned e = 0; e <= 40; ++e) {
      unsigned __int128 scaled = static_cast<unsigned __int128>(digits) << e;
      if (scaled % den == 0) {
        auto num = static_cast<std::uint64_t>(scaled / den);
        if (num > (std::uint64_t{1} << e)) {
          pos_ = start;
          fail("malformed percentile: above 100%");
        }
        return Percentile(num, e);
      }
    }
    pos_ = start;
    fail("malformed percentile: not a binary fraction");
  }

  PercentileRange pct_range() {
    expect("[");
    Percentile lo = percentile();
    expect(",");
    Percentile hi = percentile();
    expect("]");
    if (hi < lo) fail("malformed percentile range: lo > hi");
    return {lo, hi};
  }

  FeatureId feature() {
    skip();
    std::size_t start = pos_;
    std::string name = ident();
    if (std::all_of(name.begin(), name.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
      auto idx = std::stoul(name);
      if (idx >= manifest_.size()) {
        pos_ = start;
        fail("feature index out of range: " + name);
      }
      return FeatureId{static_cast<std::uint32_t>(idx)};
    }
    auto f = manifest_.find(name);
    if (!f) {
      pos_ = start;
      fail("unknown feature: " + name);
    }
    return *f;
  }

  // ------------------------------------------------------------ grammar

  Ast op() {
    if (accept("<op>")) return ast::hole(Symbol::Op);
    if (accept("max")) return ast::op(AggOp::Max);
    if (accept("min")) return ast::op(AggOp::Min);
    if (accept("sum")) return ast::op(AggOp::Sum);
    fail("expected max, min or sum");
  }

  Ast feats() {
    if (accept("<feats>")) return ast::hole(Symbol::Feats);
    std::vector<FeatureId> fs{feature()};
    while (accept(",")) {
      FeatureId f = feature();
      if (std::find(fs.begin(), fs.end(), f) != fs.end()) fail("duplicate split feature");
      fs.push_back(f);
    }
    return ast::feats(std::move(fs));
  }

  Item item() {
    if (accept("<program>")) return {ast::hole(Symbol::Program), true};
    if (accept("<split>")) return {ast::hole(Symbol::Split), true};
    if (accept("<qre>")) return {ast::hole(Symbol::Qre), false};
    if (accept("/")) {
      Ast r = re();
      expect("/");
      return {ast::unit(std::move(r)), false};
    }
    if (!accept("(")) fail("expected '(', '/' or a hole");
    std::vector<Item> inner;
    while (!looking_at(")")) {
      if (at_end()) fail("unbalanced '('");
      inner.push_back(item());
    }
    expect(")");
    auto qre_at = [&](std::size_t i) {
      if (inner[i].is_split) fail("a flow split cannot appear inside a quantitative expression");
      return inner[i].node;
    };
    if (accept("*")) {
      if (inner.size() != 1) fail("iteration takes exactly one expression");
      Ast body = qre_at(0);
      return {ast::iter(body, op()), false};
    }
    Ast o = op();
    if (accept("|")) {
      if (inner.size() != 1) fail("flow split takes exactly one expression");
      return {ast::split(inner[0].node, o, feats()), true};
    }
    if (inner.size() != 2) fail("concatenation takes exactly two expressions");
    return {ast::qre_concat(qre_at(0), qre_at(1), o), false};
  }

  bool re_atom_start() {
    skip();
    char c = peek();
    return c == '_' || c == '(' || c == '[' || looking_at("<re>") || looking_at("<pred>");
  }

  Ast re() {
    std::vector<Ast> atoms;
    while (re_atom_start()) atoms.push_back(re_atom());
    if (atoms.empty()) fail("expected a regular expression");
    Ast out = atoms.back();
    for (std::size_t i = atoms.size() - 1; i-- > 0;) out = ast::re_concat(atoms[i], out);
    return out;
  }

  Ast re_atom() {
    Ast a;
    if (accept("<re>")) {
      a = ast::hole(Symbol::Re);
    } else if (accept("_")) {
      a = ast::any();
    } else if (looking_at("(")) {
      // A parenthesised predicate, or else a group of regular expressions.
      std::size_t save = pos_;
      try {
        a = ast::re_pred(pred_or());
      } catch (const ParseError&) {
        pos_ = save;
        expect("(");
        a = re();
        expect(")");
      }
    } else {
      a = ast::re_pred(pred_or());
    }
    skip();
    if (peek() == '*') {
      ++pos_;
      a = ast::star(a);
    }
    return a;
  }

  Ast pred_or() {
    std::vector<Ast> terms{pred_and()};
    while (accept("||")) terms.push_back(pred_and());
    Ast out = terms.back();
    for (std::size_t i = terms.size() - 1; i-- > 0;) out = ast::pred_or(terms[i], out);
    return out;
  }

  Ast pred_and() {
    std::vector<Ast> terms{pred_leaf()};
    while (accept("&&")) terms.push_back(pred_leaf());
    Ast out = terms.back();
    for (std::size_t i = terms.size() - 1; i-- > 0;) out = ast::pred_and(terms[i], out);
    return out;
  }

  Ast pred_leaf() {
    if (accept("<pred>")) return ast::hole(Symbol::Pred);
    if (accept("(")) {
      Ast inner = pred_or();
      expect(")");
      return inner;
    }
    expect("[");
    if (accept("_")) {
      expect("]");
      return ast::wildcard();
    }
    FeatureId f = feature();
    Ast out;
    if (accept("==") || accept("=")) {
      out = ast::eq(f, value(f));
    } else if (accept(">=")) {
      out = ast::geq(f, value(f));
    } else if (accept("<=")) {
      out = ast::leq(f, value(f));
    } else if (accept("->")) {
      out = ast::prefix(f, prefix_value());
    } else {
      fail("expected ==, =, >=, <= or ->");
    }
    expect("]");
    return out;
  }

  Ast value(FeatureId f) {
    skip();
    if (accept("<")) {
      PercentileRange r = pct_range();
      expect(">");
      return ast::bound_hole(r);
    }
    char c = peek();
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      // Percent literal or plain integer.
      std::size_t save = pos_;
      while (!at_end() && (std::isdigit(static_cast<unsigned char>(peek())) || peek() == '.')) ++pos_;
      bool is_pct = peek() == '%';
      pos_ = save;
      if (is_pct) return ast::bound_pct(percentile());
      return ast::bound_value(integer());
    }
    std::size_t start = pos_;
    std::string sym = ident();
    auto v = manifest_.enum_value(f, sym);
    if (!v) {
      pos_ = start;
      fail("unknown value '" + sym + "' for feature " + manifest_.name(f));
    }
    return ast::bound_value(*v);
  }

  Ast prefix_value() {
    skip();
    if (accept("<")) {
      PercentileRange r = pct_range();
      expect(">");
      return ast::range_hole(r);
    }
    if (peek() == '[') return ast::range_pct(pct_range());
    std::uint64_t v = integer();
    expect("/");
    auto len = integer();
    if (len > 64) fail("prefix length above 64 bits");
    return ast::prefix_literal({v, static_cast<unsigned>(len)});
  }

  std::string_view src_;
  const TraceManifest& manifest_;
  std::size_t pos_ = 0;
};

}  // namespace

ParseResult parse(std::string_view text, const TraceManifest& manifest) {
  return Parser(text, manifest).top();
}

Ast parse_program(std::string_view text, const TraceManifest& manifest) {
  auto r = parse(text, manifest);
  if (auto* p = std::get_if<Ast>(&r)) return *p;
  throw ParseError("expected a program without threshold", 1, 1);
}

Classifier parse_classifier(std::string_view text, const TraceManifest& manifest) {
  auto r = parse(text, manifest);
  if (auto* c = std::get_if<Classifier>(&r)) return *c;
  throw ParseError("expected a classifier '<program> > <value>'", 1, 1);
}

}  // namespace netqre
