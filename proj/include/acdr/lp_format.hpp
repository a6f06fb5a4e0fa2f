#pragma once

// CPLEX LP text format: writer with deterministic layout and a reader for the
// subset the writer produces (plus common spellings of section keywords).

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "acdr/error.hpp"
#include "acdr/milp.hpp"

namespace acdr::milp {

/// 12 significant digits, no negative zero.
inline std::string format_number(double x) {
  if (x == 0) x = 0;  // folds -0
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

namespace lp_detail {

inline constexpr int kTermsPerLine = 6;

inline void write_terms(std::ostream& os, const MilpModel& m, const std::vector<Term>& terms, std::size_t& on_line) {
  for (const auto& t : terms) {
    if (on_line == kTermsPerLine) {
      os << "\n  ";
      on_line = 0;
    }
    os << (t.coef < 0 ? " - " : " + ") << format_number(std::abs(t.coef)) << ' '
       << m.variables[static_cast<std::size_t>(t.var)].name;
    ++on_line;
  }
}

inline const char* relation_text(Relation r) {
  switch (r) {
    case Relation::le: return "<=";
    case Relation::ge: return ">=";
    case Relation::eq: return "=";
  }
  return "=";
}

}  // namespace lp_detail

inline void write_lp(const MilpModel& m, std::ostream& os) {
  validate(m);
  os << "\\ acdr aggregator model: " << m.units.size() << " units, " << m.periods << " periods\n";
  os << (m.objective.sense == Sense::maximize ? "Maximize\n" : "Minimize\n");
  os << " obj:";
  std::size_t on_line = 0;
  lp_detail::write_terms(os, m, m.objective.terms, on_line);
  if (m.objective.constant != 0) {
    if (on_line == lp_detail::kTermsPerLine) os << "\n  ";
    os << (m.objective.constant < 0 ? " - " : " + ") << format_number(std::abs(m.objective.constant));
  }
  os << "\nSubject To\n";
  for (const auto& c : m.constraints) {
    os << ' ' << c.name << ':';
    std::size_t n = 0;
    lp_detail::write_terms(os, m, c.terms, n);
    os << ' ' << lp_detail::relation_text(c.rel) << ' ' << format_number(c.rhs) << '\n';
  }
  os << "Bounds\n";
  for (const auto& v : m.variables) {
    if (v.kind == VarKind::binary) continue;
    const bool lo_inf = v.lower == -kInf, hi_inf = v.upper == kInf;
    if (v.lower == 0 && hi_inf) continue;
    if (lo_inf && hi_inf)
      os << ' ' << v.name << " free\n";
    else if (hi_inf)
      os << ' ' << v.name << " >= " << format_number(v.lower) << '\n';
    else if (lo_inf)
      os << " -inf <= " << v.name << " <= " << format_number(v.upper) << '\n';
    else
      os << ' ' << format_number(v.lower) << " <= " << v.name << " <= " << format_number(v.upper) << '\n';
  }
  os << "Binaries\n";
  std::size_t n = 0;
  for (const auto& v : m.variables) {
    if (v.kind != VarKind::binary) continue;
    os << (n % 8 == 0 ? " " : " ") << v.name;
    if (++n % 8 == 0) os << '\n';
  }
  if (n % 8 != 0) os << '\n';
  os << "End\n";
}

inline std::string to_lp_string(const MilpModel& m) {
  std::ostringstream os;
  write_lp(m, os);
  return os.str();
}

inline void export_lp(const MilpModel& m, const std::filesystem::path& path) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write LP file " + path.string());
  write_lp(m, out);
  if (!out) throw IoError("failed writing LP file " + path.string());
}

namespace lp_detail {

enum class Tok { word, number, sign, colon, rel, end };

struct Token {
  Tok kind = Tok::end;
  std::string text;
  double value = 0;
  int line = 0;
};

inline std::vector<Token> tokenize(const std::string& src) {
  std::vector<Token> out;
  int line = 1;
  std::size_t i = 0;
  auto is_delim = [](char c) {
    return std::isspace(static_cast<unsigned char>(c)) || c == ':' || c == '<' || c == '>' || c == '=' ||
           c == '+' || c == '-' || c == '\\';
  };
  while (i < src.size()) {
    const char c = src[i];
    if (c == '\n') {
      ++line;
      ++i;
    } else if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
    } else if (c == '\\') {
      while (i < src.size() && src[i] != '\n') ++i;
    } else if (c == ':') {
      out.push_back({Tok::colon, ":", 0, line});
      ++i;
    } else if (c == '<' || c == '>' || c == '=') {
      std::string op(1, c);
      ++i;
      if (i < src.size() && (src[i] == '=' || src[i] == '<' || src[i] == '>')) op += src[i++];
      std::string norm = op.find('<') != std::string::npos ? "<=" : op.find('>') != std::string::npos ? ">=" : "=";
      out.push_back({Tok::rel, norm, 0, line});
    } else if (c == '+' || c == '-') {
      out.push_back({Tok::sign, std::string(1, c), 0, line});
      ++i;
    } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const std::size_t start = i;
      while (i < src.size() && (std::isdigit(static_cast<unsigned char>(src[i])) || src[i] == '.')) ++i;
      if (i < src.size() && (src[i] == 'e' || src[i] == 'E')) {
        std::size_t j = i + 1;
        if (j < src.size() && (src[j] == '+' || src[j] == '-')) ++j;
        if (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) {
          i = j;
          while (i < src.size() && std::isdigit(static_cast<unsigned char>(src[i]))) ++i;
        }
      }
      const std::string text = src.substr(start, i - start);
      out.push_back({Tok::number, text, std::stod(text), line});
    } else {
      const std::size_t start = i;
      while (i < src.size() && !is_delim(src[i])) ++i;
      out.push_back({Tok::word, src.substr(start, i - start), 0, line});
    }
  }
  out.push_back({Tok::end, "", 0, line});
  return out;
}

inline std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  return s;
}

enum class Section { none, objective, constraints, bounds, binaries, generals, end };

class Parser {
 public:
  Parser(const std::string& src, std::string source) : toks_(tokenize(src)), source_(std::move(source)) {}

  MilpModel parse() {
    while (peek().kind != Tok::end) {
      if (auto s = section_at(pos_)) {
        if (*s == Section::objective) saw_objective_ = true;
        if (*s != Section::objective && !saw_objective_) fail("expected Maximize or Minimize before other sections");
        section_ = *s;
        continue;
      }
      switch (section_) {
        case Section::objective: parse_objective(); break;
        case Section::constraints: parse_constraint(); break;
        case Section::bounds: parse_bound(); break;
        case Section::binaries: parse_binary(); break;
        case Section::generals: fail("general integer variables are not supported");
        case Section::end: fail("content after End");
        case Section::none: fail("expected Maximize or Minimize");
      }
    }
    if (section_ != Section::end) fail("missing End");
    rebuild_index();
    return std::move(model_);
  }

 private:
  const Token& peek(std::size_t k = 0) const { return toks_[std::min(pos_ + k, toks_.size() - 1)]; }
  const Token& next() { return toks_[std::min(pos_++, toks_.size() - 1)]; }

  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError(source_ + ":" + std::to_string(peek().line) + ": " + what);
  }

  /// Consumes a section keyword at `at` if present.
  std::optional<Section> section_at(std::size_t at) {
    const Token& t = toks_[at];
    if (t.kind != Tok::word) return std::nullopt;
    // a keyword followed by ':' is a row name, not a section header
    if (toks_[std::min(at + 1, toks_.size() - 1)].kind == Tok::colon) return std::nullopt;
    const auto w = lower(t.text);
    auto take = [&](Section s, std::size_t n) {
      pos_ = at + n;
      return std::optional<Section>(s);
    };
    if (w == "maximize" || w == "maximise" || w == "max" || w == "maximum") {
      model_.objective.sense = Sense::maximize;
      return take(Section::objective, 1);
    }
    if (w == "minimize" || w == "minimise" || w == "min" || w == "minimum") {
      model_.objective.sense = Sense::minimize;
      return take(Section::objective, 1);
    }
    if (w == "subject" || w == "such") {
      const auto& n2 = toks_[std::min(at + 1, toks_.size() - 1)];
      if (n2.kind == Tok::word && (lower(n2.text) == "to" || lower(n2.text) == "that"))
        return take(Section::constraints, 2);
    }
    if (w == "st" || w == "s.t." || w == "st.") return take(Section::constraints, 1);
    if (w == "bounds" || w == "bound") return take(Section::bounds, 1);
    if (w == "binaries" || w == "binary" || w == "bin") return take(Section::binaries, 1);
    if (w == "generals" || w == "general" || w == "gen") return take(Section::generals, 1);
    if (w == "end") return take(Section::end, 1);
    return std::nullopt;
  }

  int variable(const std::string& name) {
    auto it = index_.find(name);
    if (it != index_.end()) return it->second;
    const int id = model_.add_variable(name, VarKind::continuous, 0, kInf);
    index_.emplace(name, id);
    return id;
  }

  bool at_statement_start() const {
    return (peek().kind == Tok::word && peek(1).kind == Tok::colon) || peek().kind == Tok::end ||
           (peek().kind == Tok::word && is_keyword(pos_));
  }

  bool is_keyword(std::size_t at) const {
    const Token& t = toks_[at];
    if (t.kind != Tok::word || toks_[std::min(at + 1, toks_.size() - 1)].kind == Tok::colon) return false;
    const auto w = lower(t.text);
    static const char* kws[] = {"maximize", "maximise", "max", "maximum", "minimize", "minimise", "min", "minimum",
                                "subject", "such", "st", "s.t.", "st.", "bounds", "bound", "binaries", "binary",
                                "bin", "generals", "general", "gen", "end"};
    return std::any_of(std::begin(kws), std::end(kws), [&](const char* k) { return w == k; });
  }

  /// Linear expression up to a relational operator or next statement. Returns the constant part.
  double parse_expression(std::vector<Term>& terms, bool stop_at_rel) {
    double constant = 0;
    while (true) {
      if (stop_at_rel && peek().kind == Tok::rel) break;
      if (peek().kind == Tok::end || at_statement_start()) break;
      double sign = 1;
      bool any = false;
      while (peek().kind == Tok::sign) {
        if (next().text == "-") sign = -sign;
        any = true;
      }
      double coef = 1;
      bool has_number = false;
      if (peek().kind == Tok::number) {
        coef = next().value;
        has_number = true;
      }
      if (peek().kind == Tok::word && !(peek(1).kind == Tok::colon) && !is_keyword(pos_)) {
        terms.push_back({variable(next().text), sign * coef});
      } else if (has_number) {
        constant += sign * coef;
      } else if (any) {
        fail("dangling sign in expression");
      } else {
        fail("unexpected token '" + peek().text + "'");
      }
    }
    return constant;
  }

  void parse_objective() {
    if (peek().kind == Tok::word && peek(1).kind == Tok::colon) {
      next();
      next();
    }
    model_.objective.constant += parse_expression(model_.objective.terms, false);
  }

  double signed_number() {
    double sign = 1;
    while (peek().kind == Tok::sign)
      if (next().text == "-") sign = -sign;
    if (peek().kind == Tok::number) return sign * next().value;
    if (peek().kind == Tok::word) {
      const auto w = lower(peek().text);
      if (w == "inf" || w == "infinity") {
        next();
        return sign * kInf;
      }
    }
    fail("expected a number");
  }

  void parse_constraint() {
    Constraint c;
    if (peek().kind == Tok::word && peek(1).kind == Tok::colon) {
      c.name = next().text;
      next();
    } else {
      c.name = "R" + std::to_string(model_.constraints.size() + 1);
    }
    const double lhs_const = parse_expression(c.terms, true);
    if (peek().kind != Tok::rel) fail("expected relational operator in constraint " + c.name);
    const auto op = next().text;
    c.rel = op == "<=" ? Relation::le : op == ">=" ? Relation::ge : Relation::eq;
    c.rhs = signed_number() - lhs_const;
    model_.constraints.push_back(std::move(c));
  }

  bool is_number_start() const {
    if (peek().kind == Tok::number || peek().kind == Tok::sign) return true;
    if (peek().kind == Tok::word) {
      const auto w = lower(peek().text);
      return w == "inf" || w == "infinity";
    }
    return false;
  }

  void apply(int var, const std::string& op, double value, bool var_on_left) {
    auto& v = model_.variables[static_cast<std::size_t>(var)];
    const bool upper = (op == "<=") == var_on_left;
    if (op == "=") {
      v.lower = v.upper = value;
    } else if (upper) {
      v.upper = value;
    } else {
      v.lower = value;
    }
  }

  void parse_bound() {
    if (is_number_start()) {
      const double a = signed_number();
      if (peek().kind != Tok::rel) fail("expected relational operator in bound");
      const auto op1 = next().text;
      if (peek().kind != Tok::word) fail("expected variable name in bound");
      const int var = variable(next().text);
      apply(var, op1, a, false);
      if (peek().kind == Tok::rel) {
        const auto op2 = next().text;
        apply(var, op2, signed_number(), true);
      }
      return;
    }
    if (peek().kind != Tok::word) fail("malformed bound");
    const int var = variable(next().text);
    if (peek().kind == Tok::word && lower(peek().text) == "free") {
      next();
      model_.variables[static_cast<std::size_t>(var)].lower = -kInf;
      model_.variables[static_cast<std::size_t>(var)].upper = kInf;
      return;
    }
    if (peek().kind != Tok::rel) fail("expected relational operator in bound");
    const auto op = next().text;
    apply(var, op, signed_number(), true);
  }

  void parse_binary() {
    if (peek().kind != Tok::word) fail("expected variable name in Binaries");
    auto& v = model_.variables[static_cast<std::size_t>(variable(next().text))];
    v.kind = VarKind::binary;
    v.lower = 0;
    v.upper = 1;
  }

  /// Recovers per-unit index lists from the u/y/v/th/d_g<id>_t<t> naming scheme.
  void rebuild_index() {
    std::map<int, UnitIndex> units;
    std::vector<int> order;
    int periods = 0;
    for (std::size_t i = 0; i < model_.variables.size(); ++i) {
      const auto& name = model_.variables[i].name;
      if (name == "gamma") {
        model_.gamma = static_cast<int>(i);
        continue;
      }
      int id = 0, t = 0;
      char prefix[8] = {0};
      char tail = 0;
      if (std::sscanf(name.c_str(), "%7[a-z]_g%d_t%d%c", prefix, &id, &t, &tail) != 3 || t < 1) continue;
      if (!units.count(id)) order.push_back(id);
      auto& ix = units[id];
      ix.unit_id = id;
      const std::string p = prefix;
      std::vector<int>* list = p == "u" ? &ix.u : p == "y" ? &ix.y : p == "v" ? &ix.v : p == "th" ? &ix.th
                                                                     : p == "d" ? &ix.d : nullptr;
      if (!list) continue;
      if (static_cast<int>(list->size()) < t) list->resize(static_cast<std::size_t>(t), -1);
      (*list)[static_cast<std::size_t>(t - 1)] = static_cast<int>(i);
      periods = std::max(periods, t);
    }
    std::sort(order.begin(), order.end());
    for (int id : order) model_.units.push_back(units[id]);
    model_.periods = periods;
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  std::string source_;
  bool saw_objective_ = false;
  Section section_ = Section::none;
  MilpModel model_;
  std::unordered_map<std::string, int> index_;
};

}  // namespace lp_detail

inline MilpModel parse_lp(const std::string& text, const std::string& source = "<lp>") {
  return lp_detail::Parser(text, source).parse();
}

inline MilpModel read_lp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open LP file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_lp(buf.str(), path.string());
}

/// Same variables (name, kind, bounds), objective and constraints (by name,
/// relation, rhs and the multiset of (variable name, coefficient) pairs), with
/// numbers compared to a relative tolerance.
inline bool models_equivalent(const MilpModel& a, const MilpModel& b, double rel_tol, std::string* why = nullptr) {
  auto close = [&](double x, double y) {
    if (x == y) return true;
    return std::abs(x - y) <= rel_tol * std::max({1.0, std::abs(x), std::abs(y)});
  };
  auto say = [&](const std::string& s) {
    if (why) *why = s;
    return false;
  };
  if (a.variables.size() != b.variables.size()) return say("variable count differs");
  std::map<std::string, const Variable*> vb;
  for (const auto& v : b.variables) vb[v.name] = &v;
  for (const auto& v : a.variables) {
    auto it = vb.find(v.name);
    if (it == vb.end()) return say("missing variable " + v.name);
    const auto& w = *it->second;
    if (v.kind != w.kind || !close(v.lower, w.lower) || !close(v.upper, w.upper))
      return say("variable " + v.name + " differs");
  }
  auto term_multiset = [](const MilpModel& m, const std::vector<Term>& terms) {
    std::vector<std::pair<std::string, double>> out;
    for (const auto& t : terms) out.emplace_back(m.variables[static_cast<std::size_t>(t.var)].name, t.coef);
    std::sort(out.begin(), out.end());
    return out;
  };
  auto same_terms = [&](const std::vector<Term>& x, const std::vector<Term>& y) {
    const auto p = term_multiset(a, x), q = term_multiset(b, y);
    if (p.size() != q.size()) return false;
    for (std::size_t i = 0; i < p.size(); ++i)
      if (p[i].first != q[i].first || !close(p[i].second, q[i].second)) return false;
    return true;
  };
  if (a.objective.sense != b.objective.sense || !close(a.objective.constant, b.objective.constant) ||
      !same_terms(a.objective.terms, b.objective.terms))
    return say("objective differs");
  if (a.constraints.size() != b.constraints.size()) return say("constraint count differs");
  std::map<std::string, const Constraint*> cb;
  for (const auto& c : b.constraints) cb[c.name] = &c;
  for (const auto& c : a.constraints) {
    auto it = cb.find(c.name);
    if (it == cb.end()) return say("missing constraint " + c.name);
    const auto& d = *it->second;
    if (c.rel != d.rel || !close(c.rhs, d.rhs) || !same_terms(c.terms, d.terms))
      return say("constraint " + c.name + " differs");
  }
  return true;
}

}  // namespace acdr::milp
