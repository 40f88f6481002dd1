#include "netqre/rulegen.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <sstream>

namespace netqre {

UnsupportedShape::UnsupportedShape(const std::string& why, Ast node, const TraceManifest* manifest)
    : std::invalid_argument(why + ": " + print(node, manifest)), why_(why), node_(std::move(node)) {}

std::vector<std::string> RuleScript::states() const {
  std::vector<std::string> out;
  for (const auto& b : blocks) out.insert(out.end(), b.states.begin(), b.states.end());
  return out;
}

std::vector<std::string> RuleScript::counters() const {
  std::vector<std::string> out;
  for (const auto& b : blocks) out.push_back(b.table);
  out.push_back("counter");
  return out;
}

namespace {

struct BlockShape {
  bool iterate = false;
  std::vector<Ast> preds;
};

bool is_any_star(const Ast& n) {
  return n->kind == Kind::ReStar && n->kids[0]->kind == Kind::ReAny;
}

void flatten_re(const Ast& n, std::vector<Ast>& out) {
  if (n->kind == Kind::ReConcat) {
    flatten_re(n->kids[0], out);
    flatten_re(n->kids[1], out);
  } else {
    out.push_back(n);
  }
}

BlockShape unit_shape(const Ast& unit, bool iterate) {
  if (unit->kind != Kind::Unit) throw UnsupportedShape("iteration body is not a single unit", unit);
  std::vector<Ast> atoms;
  flatten_re(unit->kids[0], atoms);
  BlockShape b;
  b.iterate = iterate;
  bool want_gap = true;
  for (const auto& a : atoms) {
    if (want_gap) {
      if (!is_any_star(a)) throw UnsupportedShape("expected `_*` between predicates", unit);
    } else {
      if (a->kind != Kind::RePred) throw UnsupportedShape("expected a predicate", a);
      if (!is_complete(a)) throw UnsupportedShape("predicate is incomplete", a);
      b.preds.push_back(a->kids[0]);
    }
    want_gap = !want_gap;
  }
  if (want_gap || b.preds.empty())
    throw UnsupportedShape("regex must read `_* P1 _* ... Pk _*`", unit);
  return b;
}

void flatten_blocks(const Ast& n, std::vector<BlockShape>& out) {
  switch (n->kind) {
    case Kind::QreConcat:
      if (n->kids[2]->op != AggOp::Sum) throw UnsupportedShape("concatenation must aggregate with sum", n);
      flatten_blocks(n->kids[0], out);
      flatten_blocks(n->kids[1], out);
      return;
    case Kind::QreIter:
      if (n->kids[1]->op != AggOp::Sum) throw UnsupportedShape("iteration must aggregate with sum", n);
      out.push_back(unit_shape(n->kids[0], true));
      return;
    case Kind::Unit: out.push_back(unit_shape(n, false)); return;
    default: throw UnsupportedShape("unsupported construct", n);
  }
}

std::string last_component(const std::string& name) {
  auto dot = name.rfind('.');
  return dot == std::string::npos ? name : name.substr(dot + 1);
}

std::string feature_token(FeatureId f, const TraceManifest& m) {
  if (f == m.time_feature()) return "Interval";
  std::string base = last_component(m.name(f));
  if (m.bit_width(f) == 1) {
    std::transform(base.begin(), base.end(), base.begin(), [](unsigned char c) { return std::toupper(c); });
    return base;
  }
  if (base == "ip" || (base.size() > 3 && base.ends_with("_ip"))) return "IP";
  std::string out;
  bool up = true;
  for (char c : base) {
    if (c == '_' || c == '-') {
      up = true;
      continue;
    }
    out += up ? static_cast<char>(std::toupper(static_cast<unsigned char>(c))) : c;
    up = false;
  }
  return out;
}

std::string pred_token(const Ast& p, const TraceManifest& m) {
  switch (p->kind) {
    case Kind::PredAnd: return pred_token(p->kids[0], m) + "And" + pred_token(p->kids[1], m);
    case Kind::PredOr: return pred_token(p->kids[0], m) + "Or" + pred_token(p->kids[1], m);
    case Kind::PredWildcard: return "Any";
    default: return feature_token(p->feat, m);
  }
}

std::string snake(const std::string& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    auto c = static_cast<unsigned char>(s[i]);
    if (std::isupper(c) && i > 0) {
      auto prev = static_cast<unsigned char>(s[i - 1]);
      bool next_lower = i + 1 < s.size() && std::islower(static_cast<unsigned char>(s[i + 1]));
      if (std::islower(prev) || std::isdigit(prev) || (std::isupper(prev) && next_lower)) out += '_';
    }
    out += static_cast<char>(std::tolower(c));
  }
  return out;
}

std::string numbered(const std::string& base, std::size_t i) {
  return i == 0 ? base : base + std::to_string(i + 1);
}

class Writer {
 public:
  Writer(const RuleScript& s, const std::string& program_text, const TraceManifest& m)
      : s_(s), program_(program_text), m_(m) {}

  std::string text() {
    header();
    declarations();
    initialize();
    new_packet();
    for (std::size_t e = 0; e < s_.events.size(); ++e) event(e);
    end_packet();
    return out_.str();
  }

 private:
  bool keyed() const { return s_.key.has_value(); }
  std::string args() const { return keyed() ? "key: count, ......" : "......"; }
  std::string saved(std::size_t b) const { return numbered("saved", b); }

  std::string cell(std::size_t b, std::size_t state) const {
    const auto& blk = s_.blocks[b];
    return blk.table + (keyed() ? "[key]" : "") + "[" + blk.states[state] + "]";
  }

  std::size_t last(std::size_t b) const { return s_.blocks[b].states.size() - 1; }
  std::size_t exit_state(std::size_t b) const { return s_.blocks[b].iterate ? 0 : last(b); }

  void header() {
    out_ << "# " << s_.name << " rule script\n";
    out_ << "# " << program_ << " > " << format_threshold(s_.threshold) << "\n";
    out_ << "#\n";
    out_ << "# best[s] is the largest match count with which state s can be reached,\n";
    out_ << "# or -1 when it cannot. The events raised for one packet read the values\n";
    out_ << "# saved by new_packet; end_packet runs after them.\n";
    if (keyed()) out_ << "# Every table is kept per " << m_.name(*s_.key) << " value.\n";
    out_ << "\n";
  }

  void declarations() {
    for (const auto& b : s_.blocks) {
      out_ << "type " << b.type << ": enum {";
      for (std::size_t i = 0; i < b.states.size(); ++i) out_ << (i ? ", " : "") << b.states[i];
      out_ << "};\n";
    }
    out_ << "option " << s_.timeout << ": Time;\n";
    for (std::size_t b = 0; b < s_.blocks.size(); ++b) {
      const auto& blk = s_.blocks[b];
      if (keyed())
        out_ << "global " << blk.table << ": table[count] of table[" << blk.type << "] of int;\n";
      else
        out_ << "global " << blk.table << ": table[" << blk.type << "] of int;\n";
      out_ << "global " << saved(b) << ": table[" << blk.type << "] of int;\n";
    }
    if (keyed()) out_ << "global flows: table[count] of int;\n";
    out_ << "global counter = 0;\n";
    out_ << "global timestamp: Time = CurrentTime;\n\n";
  }

  std::string start_row(std::size_t b) const {
    // Init is reachable with count 0 when every earlier block may be skipped.
    bool reachable = true;
    for (std::size_t i = 0; i < b; ++i) reachable = reachable && s_.blocks[i].iterate;
    const auto& blk = s_.blocks[b];
    std::string row = "{";
    for (std::size_t i = 0; i < blk.states.size(); ++i)
      row += (i ? ", " : "") + blk.states[i] + ": " + (i == 0 && reachable ? "0" : "-1");
    return row + "}";
  }

  void initialize() {
    if (keyed()) {
      out_ << "function start_flow(key: count) {\n";
      for (std::size_t b = 0; b < s_.blocks.size(); ++b)
        out_ << "    " << s_.blocks[b].table << "[key] = " << start_row(b) << ";\n";
      out_ << "    flows[key] = 0;\n";
      out_ << "}\n\n";
    }
    out_ << "function initialize() {\n";
    for (std::size_t b = 0; b < s_.blocks.size(); ++b)
      out_ << "    " << s_.blocks[b].table << " = " << (keyed() ? "{}" : start_row(b)) << ";\n";
    if (keyed()) out_ << "    flows = {};\n";
    out_ << "    counter = 0;\n";
    out_ << "    timestamp = CurrentTime;\n";
    out_ << "}\n";
  }

  void new_packet() {
    out_ << "event new_packet(" << args() << ") {\n";
    out_ << "    if (CurrentTime - timestamp > " << s_.timeout << ") {\n";
    out_ << "        initialize;\n";
    out_ << "    }\n";
    if (keyed()) {
      out_ << "    if (key !in flows) {\n";
      out_ << "        start_flow(key);\n";
      out_ << "    }\n";
    }
    for (std::size_t b = 0; b < s_.blocks.size(); ++b)
      out_ << "    " << saved(b) << " = " << s_.blocks[b].table << (keyed() ? "[key]" : "") << ";\n";
    out_ << "}\n";
  }

  void event(std::size_t e) {
    out_ << "# " << print(s_.events[e].pred, &m_) << "\n";
    out_ << "event " << s_.events[e].name << "(" << args() << ") {\n";
    for (std::size_t b = 0; b < s_.blocks.size(); ++b) {
      const auto& blk = s_.blocks[b];
      for (std::size_t j = 0; j < blk.events.size(); ++j) {
        if (blk.events[j] != e) continue;
        std::string from = saved(b) + "[" + blk.states[j] + "]";
        std::string to = cell(b, j + 1);
        bool completes = j + 1 == last(b);
        out_ << "    if (" << from << " >= 0) {\n";
        out_ << "        " << to << " = max(" << to << ", " << from << (completes ? " + 1" : "") << ");\n";
        out_ << "    }\n";
      }
    }
    out_ << "}\n";
  }

  void raise(const std::string& to, const std::string& from) {
    out_ << "    " << to << " = max(" << to << ", " << from << ");\n";
  }

  void end_packet() {
    out_ << "event end_packet(" << args() << ") {\n";
    const std::size_t n = s_.blocks.size();
    for (std::size_t b = 0; b < n; ++b) {
      if (s_.blocks[b].iterate) raise(cell(b, 0), cell(b, last(b)));
      if (b + 1 < n) raise(cell(b + 1, 0), cell(b, exit_state(b)));
    }
    std::string accepted = cell(n - 1, exit_state(n - 1));
    if (keyed()) {
      out_ << "    flows[key] = max(0, " << accepted << ");\n";
      out_ << "    counter = " << (s_.key_op == AggOp::Sum ? "sum" : "max") << "(flows);\n";
    } else {
      out_ << "    counter = " << accepted << ";\n";
    }
    out_ << "    if (counter > " << format_threshold(s_.notice_above) << ") {\n";
    out_ << "        Notice(\"" << s_.name << "!\");\n";
    out_ << "        initialize;\n";
    out_ << "    }\n";
    out_ << "}\n";
  }

  const RuleScript& s_;
  std::string program_;
  const TraceManifest& m_;
  std::ostringstream out_;
};

}  // namespace

RuleScript compile_rules(const Classifier& c, const TraceManifest& manifest, const std::string& name) {
  RuleScript s;
  s.name = name;
  s.threshold = c.threshold;
  s.notice_above = std::max(c.threshold, 0.0);

  Ast body = c.program;
  if (body->kind == Kind::Split) {
    const auto& feats = body->kids[2]->feats;
    if (feats.size() != 1) throw UnsupportedShape("split must use exactly one feature", body, &manifest);
    if (body->kids[1]->op == AggOp::Min)
      throw UnsupportedShape("split must aggregate with sum or max", body, &manifest);
    s.key = feats[0];
    s.key_op = body->kids[1]->op;
    body = body->kids[0];
    if (body->kind == Kind::Split) throw UnsupportedShape("nested split", body, &manifest);
  }
  if (!is_complete(body)) throw UnsupportedShape("program has holes", body, &manifest);
  std::vector<BlockShape> shapes;
  try {
    flatten_blocks(body, shapes);
  } catch (const UnsupportedShape& e) {
    throw UnsupportedShape(e.reason(), e.node(), &manifest);
  }

  // One event per distinct predicate, in order of first use.
  std::map<std::string, std::size_t> by_text;
  std::map<std::string, std::size_t> token_uses;
  std::vector<std::string> tokens;
  for (std::size_t b = 0; b < shapes.size(); ++b) {
    RuleBlock blk;
    blk.iterate = shapes[b].iterate;
    blk.type = numbered("StateType", b);
    blk.table = numbered("best", b);
    blk.states.push_back("Init");
    std::map<std::string, std::size_t> state_uses;
    for (const auto& p : shapes[b].preds) {
      std::string key = print(p);
      auto it = by_text.find(key);
      if (it == by_text.end()) {
        std::string base = pred_token(p, manifest);
        std::string tok = numbered(base, token_uses[base]++);
        tokens.push_back(tok);
        s.events.push_back({snake(tok) + "_match", p});
        it = by_text.emplace(key, s.events.size() - 1).first;
      }
      std::string state = tokens[it->second] + "Matched";
      blk.states.push_back(numbered(state, state_uses[state]++));
      blk.events.push_back(it->second);
    }
    s.blocks.push_back(std::move(blk));
  }

  s.text = Writer(s, print(c.program, &manifest), manifest).text();
  return s;
}

}  // namespace netqre
