#include <charconv>
#include <cmath>

#include "netqre/lang.hpp"

namespace netqre {

namespace {

std::string range_text(const PercentileRange& r) {
  return "[" + r.lo.str() + "," + r.hi.str() + "]";
}

class Printer {
 public:
  explicit Printer(const TraceManifest* m) : manifest_(m) {}

  std::string program(const Ast& n) {
    switch (n->kind) {
      case Kind::Hole: return hole(*n);
      case Kind::Split:
        return "( " + program(n->kids[0]) + " )" + attr(n->kids[1]) + "|" + attr(n->kids[2]);
      case Kind::QreConcat:
        return "( " + program(n->kids[0]) + " " + program(n->kids[1]) + " )" + attr(n->kids[2]);
      case Kind::QreIter: return "( " + program(n->kids[0]) + " )*" + attr(n->kids[1]);
      case Kind::Unit: return "/" + re(n->kids[0]) + "/";
      case Kind::QreEstimate: return "(/_ _*/)*sum";
      default: return re(n);
    }
  }

 private:
  std::string hole(const Node& n) {
    if (n.hole == Symbol::Bound || n.hole == Symbol::Range) return "<" + range_text(n.range) + ">";
    return std::string(to_string(n.hole));
  }

  std::string feature(FeatureId f) {
    if (manifest_ && f.index < manifest_->size()) return manifest_->name(f);
    return std::to_string(f.index);
  }

  std::string attr(const Ast& n) {
    switch (n->kind) {
      case Kind::Hole: return hole(*n);
      case Kind::Op: return std::string(to_string(n->op));
      case Kind::Feats: {
        std::string out;
        for (std::size_t i = 0; i < n->feats.size(); ++i) {
          if (i) out += ", ";
          out += feature(n->feats[i]);
        }
        return out;
      }
      default: return "?";
    }
  }

  std::string re(const Ast& n) {
    switch (n->kind) {
      case Kind::Hole: return hole(*n);
      case Kind::ReConcat: {
        const Ast& l = n->kids[0];
        std::string left = l->kind == Kind::ReConcat ? "(" + re(l) + ")" : re(l);
        return left + " " + re(n->kids[1]);
      }
      case Kind::ReStar: {
        const Ast& c = n->kids[0];
        if (c->kind == Kind::ReAny) return "_*";
        if (c->kind == Kind::RePred && is_leaf(c->kids[0])) return pred(c->kids[0]) + "*";
        return "(" + re(c) + ")*";
      }
      case Kind::RePred: return pred(n->kids[0]);
      case Kind::ReAny: return "_";
      case Kind::ReEstimate: return "_*";
      default: return pred(n);
    }
  }

  static bool is_leaf(const Ast& p) { return p->kind != Kind::PredAnd && p->kind != Kind::PredOr; }

  std::string pred(const Ast& n) {
    switch (n->kind) {
      case Kind::Hole: return hole(*n);
      case Kind::PredAnd:
        return grouped(n->kids[0], !is_leaf(n->kids[0])) + " && " +
               grouped(n->kids[1], n->kids[1]->kind == Kind::PredOr);
      case Kind::PredOr:
        return grouped(n->kids[0], n->kids[0]->kind == Kind::PredOr) + " || " + pred(n->kids[1]);
      case Kind::PredEq: return "[" + feature(n->feat) + "==" + bound(n, n->kids[0]) + "]";
      case Kind::PredGeq: return "[" + feature(n->feat) + ">=" + bound(n, n->kids[0]) + "]";
      case Kind::PredLeq: return "[" + feature(n->feat) + "<=" + bound(n, n->kids[0]) + "]";
      case Kind::PredPrefix: return "[" + feature(n->feat) + "->" + bound(n, n->kids[0]) + "]";
      case Kind::PredWildcard: return "[_]";
      case Kind::PredUnknown: return "[?]";
      default: return "?";
    }
  }

  std::string grouped(const Ast& p, bool parens) { return parens ? "(" + pred(p) + ")" : pred(p); }

  std::string bound(const Ast& owner, const Ast& b) {
    switch (b->kind) {
      case Kind::Hole: return hole(*b);
      case Kind::BoundValue:
        if (manifest_ && owner->feat.index < manifest_->size())
          if (auto sym = manifest_->enum_name(owner->feat, b->value)) return *sym;
        return std::to_string(b->value);
      case Kind::BoundPct: return b->pct.str();
      case Kind::RangePct: return range_text(b->range);
      case Kind::PrefixLiteral:
        return std::to_string(b->prefix.value) + "/" + std::to_string(b->prefix.length);
      case Kind::BoundEstimate:
        if (owner->kind == Kind::PredGeq) return b->range.lo.str();
        if (owner->kind == Kind::PredLeq) return b->range.hi.str();
        return range_text(b->range);
      default: return "?";
    }
  }

  const TraceManifest* manifest_;
};

}  // namespace

std::string print(const Ast& p, const TraceManifest* manifest) {
  return Printer(manifest).program(p);
}

std::string format_threshold(double t) {
  if (std::isinf(t)) return t > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, t);
  return std::string(buf, res.ptr);
}

std::string print(const Classifier& c, const TraceManifest* manifest) {
  return print(c.program, manifest) + " > " + format_threshold(c.threshold);
}

}  // namespace netqre
