// Copyright 2026 The pospsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "posp/parser.hpp"

#include <cctype>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace posp {

ParseError::ParseError(int line, int column, const std::string& msg)
    : std::runtime_error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + msg),
      line_(line),
      column_(column),
      msg_(msg) {}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

namespace {

enum class Tok { Ident, Number, Imag, String, Punct, End };

struct Token {
  Tok kind = Tok::End;
  std::string text;
  double value = 0.0;
  int line = 1;
  int col = 1;
};

class Lexer {
 public:
  explicit Lexer(const std::string& s) : src_(s) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    for (;;) {
      skip_space();
      Token t;
      t.line = line_;
      t.col = col_;
      if (pos_ >= src_.size()) {
        t.kind = Tok::End;
        out.push_back(t);
        return out;
      }
      char c = src_[pos_];
      if (static_cast<unsigned char>(c) >= 0x80 || (!std::isprint(static_cast<unsigned char>(c))))
        throw ParseError(line_, col_, "non-ASCII or control character in input");
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        std::size_t b = pos_;
        while (pos_ < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
          advance();
        t.kind = Tok::Ident;
        t.text = src_.substr(b, pos_ - b);
      } else if (std::isdigit(static_cast<unsigned char>(c)) ||
                 (c == '.' && pos_ + 1 < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])))) {
        const char* start = src_.c_str() + pos_;
        char* end = nullptr;
        errno = 0;
        double v = std::strtod(start, &end);
        if (end == start || errno == ERANGE) throw ParseError(line_, col_, "malformed number");
        std::size_t len = static_cast<std::size_t>(end - start);
        // strtod accepts hex and inf/nan forms; restrict to plain decimals
        for (std::size_t k = 0; k < len; ++k) {
          char d = start[k];
          if (!(std::isdigit(static_cast<unsigned char>(d)) || d == '.' || d == 'e' || d == 'E' || d == '+' || d == '-'))
            throw ParseError(line_, col_, "malformed number");
        }
        for (std::size_t k = 0; k < len; ++k) advance();
        t.kind = Tok::Number;
        t.value = v;
        t.text = std::string(start, len);
        if (pos_ < src_.size() && src_[pos_] == 'i' &&
            !(pos_ + 1 < src_.size() &&
              (std::isalnum(static_cast<unsigned char>(src_[pos_ + 1])) || src_[pos_ + 1] == '_'))) {
          advance();
          t.kind = Tok::Imag;
        }
      } else if (c == '"') {
        advance();
        std::size_t b = pos_;
        while (pos_ < src_.size() && src_[pos_] != '"' && src_[pos_] != '\n') advance();
        if (pos_ >= src_.size() || src_[pos_] != '"') throw ParseError(t.line, t.col, "unterminated string");
        t.kind = Tok::String;
        t.text = src_.substr(b, pos_ - b);
        advance();
      } else if (std::string("()[],;=+-*/^:").find(c) != std::string::npos) {
        t.kind = Tok::Punct;
        t.text = std::string(1, c);
        advance();
      } else {
        throw ParseError(line_, col_, std::string("unexpected character '") + c + "'");
      }
      out.push_back(t);
    }
  }

 private:
  void advance() {
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }
  void skip_space() {
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (c == '#' || (c == '/' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '/')) {
        while (pos_ < src_.size() && src_[pos_] != '\n') advance();
      } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        advance();
      } else {
        break;
      }
    }
  }

  const std::string& src_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

enum class ExprContext { Hamiltonian, Observable, Constant, Gauge };

class Parser {
 public:
  Parser(std::vector<Token> toks, ModelSpec& m, bool gauge_only)
      : toks_(std::move(toks)), m_(m), gauge_only_(gauge_only) {
    if (!m_.hamiltonian.constants.count("hbar")) m_.hamiltonian.constants["hbar"] = 1.0;
  }

  void run() {
    while (peek().kind != Tok::End) statement();
  }

  GaugeSpec& gauge() {
    if (!m_.gauge) m_.gauge = GaugeSpec{};
    return *m_.gauge;
  }

  std::set<std::tuple<int, int, int, int, int>> gamma_set;
  std::vector<std::pair<int, int>> gamma_pos;  // for diagnostics per emitter

 private:
  const Token& peek(std::size_t k = 0) const { return toks_[std::min(pos_ + k, toks_.size() - 1)]; }
  const Token& next() {
    const Token& t = toks_[pos_];
    if (pos_ + 1 < toks_.size()) ++pos_;
    return t;
  }
  [[noreturn]] void fail(const Token& t, const std::string& msg) const { throw ParseError(t.line, t.col, msg); }
  bool is_punct(const std::string& p, std::size_t k = 0) const {
    return peek(k).kind == Tok::Punct && peek(k).text == p;
  }
  bool is_ident(const std::string& s, std::size_t k = 0) const {
    return peek(k).kind == Tok::Ident && peek(k).text == s;
  }
  void expect(const std::string& p) {
    if (!is_punct(p)) fail(peek(), "expected '" + p + "'");
    next();
  }
  std::string ident(const std::string& what) {
    if (peek().kind != Tok::Ident) fail(peek(), "expected " + what);
    return next().text;
  }
  void keyword(const std::string& kw) {
    if (!is_ident(kw)) fail(peek(), "expected '" + kw + "'");
    next();
  }
  int integer(const std::string& what) {
    const Token& t = peek();
    if (t.kind != Tok::Number || t.value != std::floor(t.value) || t.text.find_first_of(".eE") != std::string::npos)
      fail(t, "expected integer " + what);
    next();
    if (t.value > 1e6) fail(t, what + " too large");
    return static_cast<int>(t.value);
  }

  void statement() {
    const Token& t = peek();
    if (t.kind != Tok::Ident) fail(t, "expected a statement");
    const std::string kw = t.text;
    if (kw == "const") {
      next();
      const_decl();
    } else if (kw == "gauge") {
      next();
      gauge_decl();
    } else if (gauge_only_) {
      fail(t, "only gauge and const statements are allowed here");
    } else if (kw == "mode") {
      next();
      const Token& nt = peek();
      std::string name = ident("mode name");
      check_new_name(nt, name);
      m_.modes.push_back(name);
      expect(";");
    } else if (kw == "emitter") {
      next();
      emitter_decl();
    } else if (kw == "H") {
      next();
      if (is_punct("+") && is_punct("=", 1)) {
        next();
      } else if (h_seen_) {
        fail(t, "Hamiltonian assigned twice (use H += ...)");
      }
      expect("=");
      h_seen_ = true;
      Polynomial p = expr(ExprContext::Hamiltonian);
      add_hamiltonian(t, p);
      expect(";");
    } else if (kw == "lindblad") {
      next();
      lindblad_decl();
    } else if (kw == "init") {
      next();
      init_decl();
    } else if (kw == "eta" || kw == "theta") {
      next();
      const Token& vt = peek();
      std::string v = ident("on, off or proper");
      PhaseSampling s;
      if (v == "on") {
        s = PhaseSampling::Weighted;
      } else if (v == "off") {
        s = PhaseSampling::Off;
      } else if (v == "proper") {
        s = PhaseSampling::Proper;
      } else {
        fail(vt, "expected on, off or proper");
      }
      (kw == "eta" ? m_.initial.eta : m_.initial.theta) = s;
      expect(";");
    } else if (kw == "formulation") {
      next();
      const Token& vt = peek();
      std::string v = ident("rho or cvar");
      if (v == "rho") {
        m_.formulation = Formulation::EffectiveDensity;
      } else if (v == "cvar") {
        m_.formulation = Formulation::CVariable;
      } else {
        fail(vt, "expected rho or cvar");
      }
      expect(";");
    } else if (kw == "observe") {
      next();
      if (peek().kind != Tok::String) fail(peek(), "expected observable label string");
      std::string label = next().text;
      for (const auto& o : m_.observables)
        if (o.label == label) fail(t, "duplicate observable label '" + label + "'");
      expect("=");
      Polynomial p = expr(ExprContext::Observable);
      try {
        p = cvar_to_rho(p);
      } catch (const ModelError& e) {
        fail(t, e.what());
      }
      m_.observables.push_back({label, p});
      expect(";");
    } else if (kw == "reconstruct") {
      next();
      keyword("mode");
      const Token& nt = peek();
      std::string name = ident("mode name");
      int i = m_.mode_index(name);
      if (i < 0) fail(nt, "unknown mode '" + name + "'");
      keyword("cutoff");
      int c = integer("cutoff");
      m_.reconstruct = ReconstructSpec{i, c};
      expect(";");
    } else {
      fail(t, "unknown statement '" + kw + "'");
    }
  }

  void check_new_name(const Token& t, const std::string& name) {
    static const std::set<std::string> reserved = {"a", "adag", "rho", "sigma", "C", "Cdag", "i", "H", "gamma"};
    if (reserved.count(name)) fail(t, "'" + name + "' is reserved");
    if (m_.mode_index(name) >= 0 || m_.emitter_index(name) >= 0) fail(t, "name '" + name + "' already declared");
  }

  void emitter_decl() {
    const Token& nt = peek();
    std::string name = ident("emitter name");
    check_new_name(nt, name);
    keyword("levels");
    const Token& lt = peek();
    int n = integer("level count");
    if (n < 1 || n > 64) fail(lt, "level count must be between 1 and 64");
    EmitterDecl e{name, n, {}};
    if (is_ident("labels")) {
      next();
      std::set<std::string> seen;
      while (peek().kind == Tok::Ident) {
        const Token& lab = peek();
        std::string s = next().text;
        if (!seen.insert(s).second) fail(lab, "duplicate level label '" + s + "'");
        e.labels.push_back(s);
      }
      if (static_cast<int>(e.labels.size()) != n) fail(lt, "number of labels differs from level count");
    } else if (n == 2) {
      e.labels = {"g", "e"};
    }
    m_.emitters.push_back(e);
    m_.lindblad.emplace_back(n);
    expect(";");
  }

  void const_decl() {
    const Token& nt = peek();
    std::string name = ident("constant name");
    if (name == "i") fail(nt, "'i' is the imaginary unit");
    if (m_.mode_index(name) >= 0 || m_.emitter_index(name) >= 0) fail(nt, "name '" + name + "' already declared");
    expect("=");
    cplx v = constant_expr();
    if (name == "hbar") {
      if (v.imag() != 0.0 || !(v.real() > 0.0)) fail(nt, "hbar must be a positive real number");
      if (h_seen_) fail(nt, "hbar must be set before the Hamiltonian");
      m_.hamiltonian.hbar = v.real();
    }
    m_.hamiltonian.constants[name] = v;
    expect(";");
  }

  cplx constant_expr() {
    const Token& t = peek();
    Polynomial p = expr(ExprContext::Constant);
    if (!p.is_constant()) fail(t, "expected a constant expression");
    return p.constant_term();
  }

  int level(const Token& t, int emitter) {
    const auto& e = m_.emitters[static_cast<std::size_t>(emitter)];
    if (t.kind == Tok::Number) {
      if (t.value != std::floor(t.value) || t.text.find_first_of(".eE") != std::string::npos)
        fail(t, "level index must be an integer");
      if (t.value < 0 || t.value >= e.levels) fail(t, "level index out of range for emitter " + e.name);
      return static_cast<int>(t.value);
    }
    if (t.kind == Tok::Ident) {
      for (std::size_t k = 0; k < e.labels.size(); ++k)
        if (e.labels[k] == t.text) return static_cast<int>(k);
      fail(t, "unknown level '" + t.text + "' of emitter " + e.name);
    }
    fail(t, "expected a level label or index");
  }

  int mode_arg() {
    const Token& t = peek();
    std::string name = ident("mode name");
    int i = m_.mode_index(name);
    if (i < 0) fail(t, "unknown mode '" + name + "'");
    return i;
  }

  int emitter_arg() {
    const Token& t = peek();
    std::string name = ident("emitter name");
    int a = m_.emitter_index(name);
    if (a < 0) fail(t, "unknown emitter '" + name + "'");
    return a;
  }

  int level_arg(int a) {
    const Token& t = peek();
    next();
    return level(t, a);
  }

  // Parses a symbol call after its name; returns the phase symbol.
  PhaseSymbol symbol_call(const std::string& fn) {
    expect("(");
    PhaseSymbol s;
    if (fn == "a" || fn == "adag") {
      int i = mode_arg();
      s = fn == "a" ? PhaseSymbol::alpha(i) : PhaseSymbol::alpha_dag(i);
    } else if (fn == "rho" || fn == "sigma") {
      int a = emitter_arg();
      expect(",");
      int p = level_arg(a);
      expect(",");
      int q = level_arg(a);
      // sigma_{pq} is represented by rho_{qp}
      s = fn == "rho" ? PhaseSymbol::rho(a, p, q) : PhaseSymbol::rho(a, q, p);
    } else {
      int a = emitter_arg();
      expect(",");
      int p = level_arg(a);
      s = fn == "C" ? PhaseSymbol::c(a, p) : PhaseSymbol::c_dag(a, p);
    }
    expect(")");
    return s;
  }

  static bool is_symbol_fn(const std::string& s) {
    return s == "a" || s == "adag" || s == "rho" || s == "sigma" || s == "C" || s == "Cdag";
  }

  Polynomial expr(ExprContext ctx) {
    Polynomial r = term(ctx);
    while (is_punct("+") || is_punct("-")) {
      // "H += ..." never reaches here; '+' followed by '=' ends the expression
      if (is_punct("=", 1)) break;
      bool minus = next().text == "-";
      Polynomial t = term(ctx);
      r = minus ? r - t : r + t;
    }
    return r;
  }

  Polynomial term(ExprContext ctx) {
    Polynomial r = unary(ctx);
    while (is_punct("*") || is_punct("/")) {
      const Token& op = next();
      Polynomial f = unary(ctx);
      if (op.text == "*") {
        r = r * f;
      } else {
        if (!f.is_constant()) fail(op, "division by a non-constant expression");
        cplx d = f.constant_term();
        if (d == cplx(0.0)) fail(op, "division by zero");
        r = r * (1.0 / d);
      }
    }
    return r;
  }

  Polynomial unary(ExprContext ctx) {
    if (is_punct("-")) {
      next();
      return -unary(ctx);
    }
    if (is_punct("+")) {
      next();
      return unary(ctx);
    }
    return power(ctx);
  }

  Polynomial power(ExprContext ctx) {
    Polynomial base = primary(ctx);
    if (is_punct("^")) {
      next();
      const Token& et = peek();
      int n = integer("exponent");
      if (n > 64) fail(et, "exponent too large");
      return base.pow(n);
    }
    return base;
  }

  Polynomial primary(ExprContext ctx) {
    const Token& t = peek();
    if (t.kind == Tok::Number) {
      next();
      return Polynomial(cplx(t.value, 0.0));
    }
    if (t.kind == Tok::Imag) {
      next();
      return Polynomial(cplx(0.0, t.value));
    }
    if (is_punct("(")) {
      next();
      Polynomial p = expr(ctx);
      expect(")");
      return p;
    }
    if (t.kind == Tok::Ident) {
      if (is_symbol_fn(t.text) && is_punct("(", 1)) {
        if (ctx == ExprContext::Constant) fail(t, "phase-space symbol in a constant expression");
        next();
        return Polynomial::symbol(symbol_call(t.text));
      }
      auto it = m_.hamiltonian.constants.find(t.text);
      if (it != m_.hamiltonian.constants.end()) {
        next();
        return Polynomial(it->second);
      }
      if (t.text == "i") {
        next();
        return Polynomial(cplx(0.0, 1.0));
      }
      fail(t, "unknown symbol '" + t.text + "'");
    }
    fail(t, "expected an expression");
  }

  void add_hamiltonian(const Token& t, Polynomial p) {
    try {
      p = cvar_to_rho(p);
    } catch (const ModelError& e) {
      fail(t, e.what());
    }
    for (const auto& [mono, c] : p.terms())
      if (has_same_emitter_product(mono)) fail(t, "same-emitter product in Hamiltonian");
    m_.hamiltonian.poly += p;
  }

  void lindblad_decl() {
    int a = emitter_arg();
    expect(":");
    keyword("gamma");
    expect("(");
    int idx[4];
    for (int k = 0; k < 4; ++k) {
      if (k) expect(",");
      idx[k] = level_arg(a);
    }
    expect(")");
    expect("=");
    cplx v = constant_expr();
    m_.lindblad[static_cast<std::size_t>(a)].at(idx[0], idx[1], idx[2], idx[3]) = v;
    expect(";");
  }

  void init_decl() {
    const Token& t = peek();
    std::string what = ident("mode or emitter");
    if (what == "mode") {
      int i = mode_arg();
      keyword("coherent");
      cplx v = constant_expr();
      m_.initial.alpha0.resize(m_.modes.size(), cplx(0.0));
      m_.initial.alpha0[static_cast<std::size_t>(i)] = v;
      expect(";");
      return;
    }
    if (what != "emitter") fail(t, "expected 'mode' or 'emitter'");
    int a = emitter_arg();
    const int n = m_.emitters[static_cast<std::size_t>(a)].levels;
    m_.initial.emitters.resize(m_.emitters.size());
    auto& e = m_.initial.emitters[static_cast<std::size_t>(a)];
    const Token& kt = peek();
    std::string kind = ident("pure, mixed or level");
    if (kind == "pure") {
      expect("(");
      std::vector<cplx> v;
      for (;;) {
        v.push_back(constant_expr());
        if (is_punct(",")) {
          next();
          continue;
        }
        break;
      }
      expect(")");
      if (static_cast<int>(v.size()) != n) fail(kt, "pure state needs one amplitude per level");
      e.kind = EmitterInit::Kind::Pure;
      e.amplitudes = Eigen::Map<Eigen::VectorXcd>(v.data(), n);
    } else if (kind == "level") {
      int p = level_arg(a);
      e.kind = EmitterInit::Kind::Pure;
      e.amplitudes = Eigen::VectorXcd::Zero(n);
      e.amplitudes(p) = 1.0;
    } else if (kind == "mixed") {
      expect("[");
      Eigen::MatrixXcd d(n, n);
      for (int r = 0; r < n; ++r) {
        if (r) expect(",");
        expect("[");
        for (int c = 0; c < n; ++c) {
          if (c) expect(",");
          d(r, c) = constant_expr();
        }
        expect("]");
      }
      expect("]");
      e.kind = EmitterInit::Kind::Mixed;
      e.density = d;
    } else {
      fail(kt, "expected pure, mixed or level");
    }
    expect(";");
  }

  void gauge_decl() {
    const Token& t = peek();
    std::string what = ident("deltaA or A0");
    if (what == "A0") {
      expect("=");
      gauge().a0 += expr(ExprContext::Gauge);
      expect(";");
      return;
    }
    if (what != "deltaA") fail(t, "expected deltaA or A0");
    expect("(");
    const Token& st = peek();
    std::string fn = ident("symbol");
    if (!is_symbol_fn(fn)) fail(st, "expected a phase-space symbol");
    PhaseSymbol s = symbol_call(fn);
    expect(")");
    expect("=");
    Polynomial p = expr(ExprContext::Gauge);
    gauge().delta_drift[s] += p;
    expect(";");
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  ModelSpec& m_;
  bool gauge_only_;
  bool h_seen_ = false;
};

void check_gamma_hermitian(const ModelSpec& m) {
  for (std::size_t a = 0; a < m.lindblad.size(); ++a) {
    const auto& g = m.lindblad[a];
    const int n = g.levels;
    const double tol = 1e-12 * (1.0 + g.max_abs());
    for (int p = 0; p < n; ++p)
      for (int q = 0; q < n; ++q)
        for (int r = 0; r < n; ++r)
          for (int s = 0; s < n; ++s)
            if (std::abs(std::conj(g.at(p, q, r, s)) - g.at(r, s, p, q)) > tol)
              throw ParseError(0, 0, "non-Hermitian gamma for emitter " + m.emitters[a].name);
  }
}

}  // namespace

ModelSpec parse_model(const std::string& text) {
  ModelSpec m;
  try {
    Lexer lx(text);
    Parser ps(lx.run(), m, false);
    ps.run();
  } catch (const ParseError&) {
    throw;
  } catch (const std::exception& e) {
    throw ParseError(0, 0, e.what());
  }
  check_gamma_hermitian(m);
  resolve_initial_state(m);
  return m;
}

GaugeSpec parse_gauge(const std::string& text, const ModelSpec& model) {
  ModelSpec m = model;
  m.gauge.reset();
  try {
    Lexer lx(text);
    Parser ps(lx.run(), m, true);
    ps.run();
  } catch (const ParseError&) {
    throw;
  } catch (const std::exception& e) {
    throw ParseError(0, 0, e.what());
  }
  GaugeSpec g = m.gauge.value_or(GaugeSpec{});
  g.source = text;
  return g;
}

}  // namespace posp
