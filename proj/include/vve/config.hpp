#pragma once
/// @file config.hpp
/// @brief Run configuration: a strict TOML-subset parser, an analytic
///        expression language for initial data and reference density, named
///        data presets, canonical serialization (the hashing pre-image), and
///        builders that assemble grid / fields / plans from a RunConfig.
///
/// The accepted configuration language is a deliberately small TOML subset:
///   - `[section]` headers (one level; a header may repeat only once),
///   - `key = value` pairs with bare keys `[A-Za-z0-9_-]+`,
///   - values: booleans, floating-point numbers, double-quoted strings
///     (escapes \" \\ \n \t), and single-line homogeneous arrays of numbers
///     or strings,
///   - `#` comments (full-line or trailing).
/// Anything else is rejected with the offending line number.  Unknown keys
/// are rejected with their full dotted path, so typos cannot silently fall
/// back to defaults.

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "vve/boundary.hpp"
#include "vve/errors.hpp"
#include "vve/grid.hpp"
#include "vve/integrate.hpp"
#include "vve/material.hpp"
#include "vve/sweep.hpp"

namespace vve {

// ---------------------------------------------------------------------------
// Analytic field expressions
// ---------------------------------------------------------------------------

/// A compiled scalar expression in the reference coordinates (x, y, z).
///
/// Grammar (usual precedence, `^` binds tightest and is right-associative,
/// so -x^2 means -(x^2) and 2^-3 is accepted):
///   expr   := term (('+'|'-') term)*
///   term   := unary (('*'|'/') unary)*
///   unary  := '-' unary | factor
///   factor := primary ('^' unary)?
///   primary:= number | 'x'|'y'|'z' | 'pi' | 'e' | fn '(' expr ')' | '(' expr ')'
/// with fn one of: exp, log, sqrt, abs, sin, cos, tan, sinh, cosh, tanh,
/// smoothstep.  `smoothstep(s)` clamps s to [0, 1] and returns s^2 (3 - 2 s),
/// the C^1 ramp used to give preset data compact support.
class FieldExpr {
 public:
  FieldExpr() : FieldExpr("0") {}

  explicit FieldExpr(std::string text) : text_(std::move(text)) {
    pos_ = 0;
    parse_expr();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected trailing input");
    if (ops_.empty()) fail("empty expression");
    int depth = 0, max_depth = 0;
    for (const Op& op : ops_) {
      if (op.code == OpCode::push_const || op.code == OpCode::push_x ||
          op.code == OpCode::push_y || op.code == OpCode::push_z)
        ++depth;
      else if (op.code != OpCode::neg && op.code != OpCode::fn)
        --depth;
      max_depth = std::max(max_depth, depth);
    }
    if (max_depth > 63) fail("expression too deep");
  }

  const std::string& text() const { return text_; }

  double eval(double x, double y, double z) const {
    double stack[64];
    int top = -1;
    for (const Op& op : ops_) {
      switch (op.code) {
        case OpCode::push_const: stack[++top] = op.value; break;
        case OpCode::push_x: stack[++top] = x; break;
        case OpCode::push_y: stack[++top] = y; break;
        case OpCode::push_z: stack[++top] = z; break;
        case OpCode::add: --top; stack[top] += stack[top + 1]; break;
        case OpCode::sub: --top; stack[top] -= stack[top + 1]; break;
        case OpCode::mul: --top; stack[top] *= stack[top + 1]; break;
        case OpCode::div: --top; stack[top] /= stack[top + 1]; break;
        case OpCode::pow: --top; stack[top] = std::pow(stack[top], stack[top + 1]); break;
        case OpCode::neg: stack[top] = -stack[top]; break;
        case OpCode::fn: stack[top] = apply_fn(op.fn_id, stack[top]); break;
      }
    }
    return stack[0];
  }

 private:
  enum class OpCode { push_const, push_x, push_y, push_z, add, sub, mul, div, pow, neg, fn };
  struct Op {
    OpCode code;
    double value{0.0};
    int fn_id{0};
  };

  static constexpr const char* kFnNames[] = {"exp",  "log",  "sqrt", "abs",       "sin", "cos",
                                             "tan",  "sinh", "cosh", "tanh",      "smoothstep"};

  static double apply_fn(int id, double s) {
    switch (id) {
      case 0: return std::exp(s);
      case 1: return std::log(s);
      case 2: return std::sqrt(s);
      case 3: return std::abs(s);
      case 4: return std::sin(s);
      case 5: return std::cos(s);
      case 6: return std::tan(s);
      case 7: return std::sinh(s);
      case 8: return std::cosh(s);
      case 9: return std::tanh(s);
      case 10: {
        const double c = s < 0.0 ? 0.0 : (s > 1.0 ? 1.0 : s);
        return c * c * (3.0 - 2.0 * c);
      }
    }
    return 0.0;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw Error(ErrorKind::ConfigError, "expression error at position " + std::to_string(pos_) +
                                            " in '" + text_ + "': " + what);
  }

  void skip_ws() {
    while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t')) ++pos_;
  }

  bool eat(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void parse_expr() {
    if (++nest_ > 128) fail("expression too deeply nested");
    parse_term();
    --nest_;
    for (;;) {
      if (eat('+')) {
        parse_term();
        ops_.push_back({OpCode::add});
      } else if (eat('-')) {
        parse_term();
        ops_.push_back({OpCode::sub});
      } else {
        return;
      }
    }
  }

  void parse_term() {
    parse_unary();
    for (;;) {
      if (eat('*')) {
        parse_unary();
        ops_.push_back({OpCode::mul});
      } else if (eat('/')) {
        parse_unary();
        ops_.push_back({OpCode::div});
      } else {
        return;
      }
    }
  }

  void parse_unary() {
    if (eat('-')) {
      if (++nest_ > 128) fail("expression too deeply nested");
      parse_unary();
      --nest_;
      ops_.push_back({OpCode::neg});
      return;
    }
    parse_factor();
  }

  void parse_factor() {
    parse_primary();
    if (eat('^')) {
      parse_unary();  // right-associative; allows 2^-3
      ops_.push_back({OpCode::pow});
    }
  }

  void parse_primary() {
    skip_ws();
    if (pos_ >= text_.size()) fail("expected a value");
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      parse_expr();
      if (!eat(')')) fail("expected ')'");
      return;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const char* begin = text_.c_str() + pos_;
      char* end = nullptr;
      const double v = std::strtod(begin, &end);
      if (end == begin) fail("malformed number");
      pos_ += static_cast<std::size_t>(end - begin);
      ops_.push_back({OpCode::push_const, v});
      return;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = pos_;
      while (j < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[j])) || text_[j] == '_'))
        ++j;
      const std::string name = text_.substr(pos_, j - pos_);
      pos_ = j;
      if (name == "x") { ops_.push_back({OpCode::push_x}); return; }
      if (name == "y") { ops_.push_back({OpCode::push_y}); return; }
      if (name == "z") { ops_.push_back({OpCode::push_z}); return; }
      if (name == "pi") { ops_.push_back({OpCode::push_const, 3.14159265358979323846}); return; }
      if (name == "e") { ops_.push_back({OpCode::push_const, 2.71828182845904523536}); return; }
      for (int id = 0; id < static_cast<int>(std::size(kFnNames)); ++id) {
        if (name == kFnNames[id]) {
          if (!eat('(')) fail("function '" + name + "' expects '('");
          parse_expr();
          if (!eat(')')) fail("expected ')' after argument of '" + name + "'");
          Op op{OpCode::fn};
          op.fn_id = id;
          ops_.push_back(op);
          return;
        }
      }
      fail("unknown identifier '" + name + "'");
    }
    fail(std::string("unexpected character '") + c + "'");
  }

  std::string text_;
  std::size_t pos_{0};
  int nest_{0};
  std::vector<Op> ops_;
};

// ---------------------------------------------------------------------------
// TOML-subset document
// ---------------------------------------------------------------------------

namespace detail {

struct TomlValue {
  enum class Kind { boolean, number, string, number_array, string_array };
  Kind kind{Kind::number};
  bool b{false};
  double num{0.0};
  std::string str;
  std::vector<double> nums;
  std::vector<std::string> strs;
  int line{0};
};

[[noreturn]] inline void toml_fail(int line, const std::string& what) {
  throw Error(ErrorKind::ConfigError,
              "config parse error at line " + std::to_string(line) + ": " + what);
}

inline void toml_skip_ws(const std::string& s, std::size_t& i) {
  while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
}

inline std::string toml_parse_string(const std::string& s, std::size_t& i, int line) {
  // s[i] == '"on entry
  ++i;
  std::string out;
  while (i < s.size()) {
    const char c = s[i++];
    if (c == '"') return out;
    if (c == '\\') {
      if (i >= s.size()) toml_fail(line, "unterminated escape in string");
      const char e = s[i++];
      switch (e) {
        case '"': out.push_back('"'); break;
        case '\\': out.push_back('\\'); break;
        case 'n': out.push_back('\n'); break;
        case 't': out.push_back('\t'); break;
        default: toml_fail(line, std::string("unsupported escape '\\") + e + "' in string");
      }
    } else {
      out.push_back(c);
    }
  }
  toml_fail(line, "unterminated string");
}

inline bool toml_parse_number(const std::string& s, std::size_t& i, double* out) {
  const char* begin = s.c_str() + i;
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin) return false;
  i += static_cast<std::size_t>(end - begin);
  *out = v;
  return true;
}

inline TomlValue toml_parse_value(const std::string& s, std::size_t& i, int line) {
  toml_skip_ws(s, i);
  if (i >= s.size()) toml_fail(line, "missing value after '='");
  TomlValue v;
  v.line = line;
  const char c = s[i];
  if (c == '"') {
    v.kind = TomlValue::Kind::string;
    v.str = toml_parse_string(s, i, line);
    return v;
  }
  if (c == '[') {
    ++i;
    bool first = true;
    bool is_string = false;
    for (;;) {
      toml_skip_ws(s, i);
      if (i < s.size() && s[i] == ']') {
        ++i;
        break;
      }
      if (!first) {
        if (i >= s.size() || s[i] != ',') toml_fail(line, "expected ',' or ']' in array");
        ++i;
        toml_skip_ws(s, i);
        if (i < s.size() && s[i] == ']') {  // trailing comma
          ++i;
          break;
        }
      }
      if (i >= s.size()) toml_fail(line, "unterminated array");
      if (s[i] == '"') {
        if (!first && !is_string) toml_fail(line, "arrays must be homogeneous");
        is_string = true;
        v.strs.push_back(toml_parse_string(s, i, line));
      } else {
        if (!first && is_string) toml_fail(line, "arrays must be homogeneous");
        double num = 0.0;
        if (!toml_parse_number(s, i, &num)) toml_fail(line, "malformed array element");
        v.nums.push_back(num);
      }
      first = false;
    }
    v.kind = is_string ? TomlValue::Kind::string_array : TomlValue::Kind::number_array;
    return v;
  }
  if (s.compare(i, 4, "true") == 0 &&
      (i + 4 == s.size() || !std::isalnum(static_cast<unsigned char>(s[i + 4])))) {
    i += 4;
    v.kind = TomlValue::Kind::boolean;
    v.b = true;
    return v;
  }
  if (s.compare(i, 5, "false") == 0 &&
      (i + 5 == s.size() || !std::isalnum(static_cast<unsigned char>(s[i + 5])))) {
    i += 5;
    v.kind = TomlValue::Kind::boolean;
    v.b = false;
    return v;
  }
  if (toml_parse_number(s, i, &v.num)) {
    v.kind = TomlValue::Kind::number;
    return v;
  }
  toml_fail(line, "malformed value");
}

inline bool toml_is_bare_key_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
}

/// Flat dotted-path map of a parsed document, e.g. "material.gamma".
struct TomlDoc {
  std::map<std::string, TomlValue> values;
};

inline TomlDoc toml_parse(const std::string& text) {
  TomlDoc doc;
  std::set<std::string> seen_sections;
  std::string section;
  std::size_t pos = 0;
  int line_no = 0;
  while (pos <= text.size()) {
    const std::size_t eol = text.find('\n', pos);
    const std::string line =
        text.substr(pos, eol == std::string::npos ? std::string::npos : eol - pos);
    pos = eol == std::string::npos ? text.size() + 1 : eol + 1;
    ++line_no;

    std::size_t i = 0;
    toml_skip_ws(line, i);
    if (i >= line.size() || line[i] == '#' || line[i] == '\r') continue;

    if (line[i] == '[') {
      ++i;
      toml_skip_ws(line, i);
      std::size_t j = i;
      while (j < line.size() && toml_is_bare_key_char(line[j])) ++j;
      if (j == i) toml_fail(line_no, "malformed section header");
      const std::string name = line.substr(i, j - i);
      i = j;
      toml_skip_ws(line, i);
      if (i >= line.size() || line[i] != ']') toml_fail(line_no, "expected ']' in section header");
      ++i;
      toml_skip_ws(line, i);
      if (i < line.size() && line[i] != '#' && line[i] != '\r')
        toml_fail(line_no, "unexpected trailing input after section header");
      if (!seen_sections.insert(name).second)
        toml_fail(line_no, "section [" + name + "] defined twice");
      section = name;
      continue;
    }

    std::size_t j = i;
    while (j < line.size() && toml_is_bare_key_char(line[j])) ++j;
    if (j == i) toml_fail(line_no, "expected a key");
    const std::string key = line.substr(i, j - i);
    i = j;
    toml_skip_ws(line, i);
    if (i >= line.size() || line[i] != '=') toml_fail(line_no, "expected '=' after key '" + key + "'");
    ++i;
    TomlValue v = toml_parse_value(line, i, line_no);
    toml_skip_ws(line, i);
    if (i < line.size() && line[i] != '#' && line[i] != '\r')
      toml_fail(line_no, "unexpected trailing input after value");

    const std::string path = section.empty() ? key : section + "." + key;
    auto [it, inserted] = doc.values.emplace(path, std::move(v));
    if (!inserted)
      toml_fail(line_no, "duplicate key '" + path + "' (first defined at line " +
                             std::to_string(it->second.line) + ")");
  }
  return doc;
}

/// Typed, consumption-tracked access to a TomlDoc.  Every read marks the key
/// as used; finish() rejects whatever is left, naming the dotted path.
class TomlReader {
 public:
  explicit TomlReader(TomlDoc doc) : doc_(std::move(doc)) {}

  bool has(const std::string& path) const { return doc_.values.count(path) != 0; }

  double number(const std::string& path, double fallback) {
    const TomlValue* v = take(path);
    if (!v) return fallback;
    if (v->kind != TomlValue::Kind::number) type_fail(path, *v, "a number");
    return v->num;
  }

  long integer(const std::string& path, long fallback) {
    const TomlValue* v = take(path);
    if (!v) return fallback;
    if (v->kind != TomlValue::Kind::number || std::floor(v->num) != v->num ||
        std::abs(v->num) > 9.0e15)
      type_fail(path, *v, "an integer");
    return static_cast<long>(v->num);
  }

  bool flag(const std::string& path, bool fallback) {
    const TomlValue* v = take(path);
    if (!v) return fallback;
    if (v->kind != TomlValue::Kind::boolean) type_fail(path, *v, "a boolean");
    return v->b;
  }

  std::string str(const std::string& path, const std::string& fallback) {
    const TomlValue* v = take(path);
    if (!v) return fallback;
    if (v->kind != TomlValue::Kind::string) type_fail(path, *v, "a string");
    return v->str;
  }

  /// A string-valued field that also accepts a bare number (stored as text),
  /// used for expression keys like material.rho0 = 1.
  std::string expr(const std::string& path, const std::string& fallback) {
    const TomlValue* v = take(path);
    if (!v) return fallback;
    if (v->kind == TomlValue::Kind::string) return v->str;
    if (v->kind == TomlValue::Kind::number) {
      char buf[40];
      std::snprintf(buf, sizeof(buf), "%.17g", v->num);
      return buf;
    }
    type_fail(path, *v, "a string or a number");
  }

  std::vector<double> number_array(const std::string& path, std::vector<double> fallback) {
    const TomlValue* v = take(path);
    if (!v) return fallback;
    if (v->kind == TomlValue::Kind::number_array && !v->nums.empty()) return v->nums;
    type_fail(path, *v, "a non-empty array of numbers");
  }

  std::vector<std::string> string_array(const std::string& path,
                                        std::vector<std::string> fallback) {
    const TomlValue* v = take(path);
    if (!v) return fallback;
    if (v->kind == TomlValue::Kind::string_array && !v->strs.empty()) return v->strs;
    type_fail(path, *v, "a non-empty array of strings");
  }

  void finish() const {
    for (const auto& [path, v] : doc_.values) {
      if (!used_.count(path))
        throw Error(ErrorKind::ConfigError, "unknown config key '" + path + "' (line " +
                                                std::to_string(v.line) + ")");
    }
  }

 private:
  const TomlValue* take(const std::string& path) {
    auto it = doc_.values.find(path);
    if (it == doc_.values.end()) return nullptr;
    used_.insert(path);
    return &it->second;
  }

  [[noreturn]] static void type_fail(const std::string& path, const TomlValue& v,
                                     const std::string& want) {
    throw Error(ErrorKind::ConfigError, "config key '" + path + "' expects " + want + " (line " +
                                            std::to_string(v.line) + ")");
  }

  TomlDoc doc_;
  std::set<std::string> used_;
};

inline std::string fmt_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string toml_quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default: out.push_back(c);
    }
  }
  out.push_back('"');
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Enum name parsing (error messages list the accepted values)
// ---------------------------------------------------------------------------

inline GridMode parse_grid_mode(const std::string& s) {
  if (s == "column1d") return GridMode::column1d;
  if (s == "slab2d") return GridMode::slab2d;
  if (s == "slab3d") return GridMode::slab3d;
  throw Error(ErrorKind::ConfigError,
              "grid.mode must be one of \"column1d\", \"slab2d\", \"slab3d\", got \"" + s + "\"");
}

inline BCKind parse_bc_kind(const std::string& s) {
  if (s == "no_slip") return BCKind::no_slip;
  if (s == "navier_slip") return BCKind::navier_slip;
  throw Error(ErrorKind::ConfigError,
              "bc.kind must be one of \"no_slip\", \"navier_slip\", got \"" + s + "\"");
}

inline Scheme parse_scheme(const std::string& s) {
  if (s == "rk4_explicit") return Scheme::rk4_explicit;
  if (s == "imex_viscous") return Scheme::imex_viscous;
  throw Error(ErrorKind::ConfigError,
              "integrator.scheme must be one of \"rk4_explicit\", \"imex_viscous\", got \"" + s +
                  "\"");
}

inline SweepMode parse_sweep_mode(const std::string& s) {
  if (s == "viscoelastic") return SweepMode::viscoelastic;
  if (s == "ns_contrast") return SweepMode::ns_contrast;
  throw Error(ErrorKind::ConfigError,
              "sweep.modes entries must be \"viscoelastic\" or \"ns_contrast\", got \"" + s +
                  "\"");
}

// ---------------------------------------------------------------------------
// RunConfig
// ---------------------------------------------------------------------------

/// Initial data: the flow map starts at identity plus a displacement
/// perturbation (phi1, phi2, phi3) and the velocity at (v1, v2, v3), all
/// analytic expressions in (x, y, z).  A named preset fills these expressions;
/// a preset and explicit expressions are mutually exclusive in one config.
struct InitConfig {
  std::string preset;  ///< resolved preset name, empty for explicit data
  std::array<std::string, 3> phi{"0", "0", "0"};
  std::array<std::string, 3> v{"0", "0", "0"};
};

struct OutputConfig {
  std::string directory;      ///< empty = no artifacts are written
  long snapshot_every{0};     ///< steps between snapshots (0 = final state only)
  long diagnostics_every{1};  ///< steps between diagnostics rows
};

/// The [sweep] block; translated to a SweepPlan by build_sweep_plan.
struct SweepBlock {
  std::vector<double> eps{1e-1, 3.1622776601683794e-2, 1e-2, 3.1622776601683794e-3, 1e-3};
  bool include_inviscid{true};
  std::vector<std::string> modes{"viscoelastic"};
  std::vector<std::string> bc_kinds;  ///< empty = follow bc.kind of this config
  long max_samples{65};
  long func_order{2};
  double bl_z_frac{0.1};
  long jobs{1};
};

struct RunConfig {
  GridMode mode{GridMode::column1d};
  long nx{1}, ny{1}, nz{257};
  double Lx{1.0}, Ly{1.0}, Lz{1.0};

  MaterialParams material{};   // gamma 1.4, mu 1, lambda 0, alpha 1, eps 0, elastic on
  std::string rho0{"1"};       ///< reference density expression, must be positive on nodes

  BCKind bc_kind{BCKind::no_slip};
  double bc_alpha{-1.0};  ///< < 0 means "follow material.alpha"

  Scheme scheme{Scheme::imex_viscous};
  double t_final{0.5};
  double cfl_adv{0.4};
  double cfl_visc{0.25};
  long max_steps{1000000};
  double fixed_dt{0.0};

  InitConfig init{};
  OutputConfig output{};
  SweepBlock sweep{};

  double effective_bc_alpha() const { return bc_alpha < 0.0 ? material.alpha : bc_alpha; }

  void validate() const;
  std::string canonical_toml() const;
};

// ---------------------------------------------------------------------------
// Named initial-data presets
// ---------------------------------------------------------------------------

/// Fills init.phi / init.v for a named preset.  All presets keep the flow map
/// at identity and give the velocity compact support inside (0, Lz), so the
/// order-0 wall conditions hold exactly for both boundary kinds.
inline void apply_init_preset(InitConfig& init) {
  init.phi = {"0", "0", "0"};
  init.v = {"0", "0", "0"};
  if (init.preset == "rest") return;
  if (init.preset == "standard") {
    // Tangential Gaussian bump, amplitude 0.1, centre 0.25, width 0.08,
    // smoothly cut to compact support in (0.02, 0.93).
    init.v[0] =
        "0.1*exp(-((z-0.25)/0.08)^2)*smoothstep((z-0.02)/0.06)*smoothstep((0.93-z)/0.06)";
    return;
  }
  if (init.preset == "compress") {
    // Normal-velocity bump: drives pressure and the normal momentum balance.
    init.v[2] =
        "-0.05*exp(-((z-0.5)/0.12)^2)*smoothstep((z-0.05)/0.1)*smoothstep((0.95-z)/0.1)";
    return;
  }
  if (init.preset == "slipstream") {
    // Narrow wall ramp (width 1/16) into a tangential plateau: the
    // boundary-layer growth fixture for the pure-fluid contrast runs.
    init.v[0] = "0.05*smoothstep(z/0.0625)*smoothstep((1-z)/0.25)";
    return;
  }
  if (init.preset == "wide_bump") {
    // Wide wall ramp (width 0.15 on a height-2 slab): the uniform-regime
    // fixture for deep-viscosity elastic sweeps.
    init.v[0] = "0.05*smoothstep(z/0.15)*smoothstep((1.6-z)/0.3)";
    return;
  }
  throw Error(ErrorKind::ConfigError,
              "init.preset must be one of \"rest\", \"standard\", \"compress\", \"slipstream\", "
              "\"wide_bump\", got \"" +
                  init.preset + "\"");
}

// ---------------------------------------------------------------------------
// parse_config
// ---------------------------------------------------------------------------

inline RunConfig parse_config(const std::string& text) {
  detail::TomlReader r(detail::toml_parse(text));
  RunConfig c;

  c.mode = parse_grid_mode(r.str("grid.mode", "column1d"));
  c.nx = r.integer("grid.nx", c.nx);
  c.ny = r.integer("grid.ny", c.ny);
  c.nz = r.integer("grid.nz", c.nz);
  c.Lx = r.number("grid.Lx", c.Lx);
  c.Ly = r.number("grid.Ly", c.Ly);
  c.Lz = r.number("grid.Lz", c.Lz);

  c.material.gamma = r.number("material.gamma", c.material.gamma);
  c.material.mu = r.number("material.mu", c.material.mu);
  c.material.lambda = r.number("material.lambda", c.material.lambda);
  c.material.alpha = r.number("material.alpha", c.material.alpha);
  c.material.eps = r.number("material.eps", c.material.eps);
  c.material.elastic_on = r.flag("material.elastic_on", c.material.elastic_on);
  c.rho0 = r.expr("material.rho0", c.rho0);

  c.bc_kind = parse_bc_kind(r.str("bc.kind", to_string(c.bc_kind)));
  c.bc_alpha = r.number("bc.alpha", c.bc_alpha);

  c.scheme = parse_scheme(r.str("integrator.scheme", to_string(c.scheme)));
  c.t_final = r.number("integrator.t_final", c.t_final);
  c.cfl_adv = r.number("integrator.cfl_adv", c.cfl_adv);
  c.cfl_visc = r.number("integrator.cfl_visc", c.cfl_visc);
  c.max_steps = r.integer("integrator.max_steps", c.max_steps);
  c.fixed_dt = r.number("integrator.fixed_dt", c.fixed_dt);

  const bool has_preset = r.has("init.preset");
  const bool has_explicit = r.has("init.phi1") || r.has("init.phi2") || r.has("init.phi3") ||
                            r.has("init.v1") || r.has("init.v2") || r.has("init.v3");
  if (has_preset && has_explicit)
    throw Error(ErrorKind::ConfigError,
                "init.preset and explicit init expressions are mutually exclusive");
  c.init.preset = r.str("init.preset", "");
  c.init.phi[0] = r.expr("init.phi1", c.init.phi[0]);
  c.init.phi[1] = r.expr("init.phi2", c.init.phi[1]);
  c.init.phi[2] = r.expr("init.phi3", c.init.phi[2]);
  c.init.v[0] = r.expr("init.v1", c.init.v[0]);
  c.init.v[1] = r.expr("init.v2", c.init.v[1]);
  c.init.v[2] = r.expr("init.v3", c.init.v[2]);
  if (has_preset) apply_init_preset(c.init);

  c.output.directory = r.str("output.directory", c.output.directory);
  c.output.snapshot_every = r.integer("output.snapshot_every", c.output.snapshot_every);
  c.output.diagnostics_every = r.integer("output.diagnostics_every", c.output.diagnostics_every);

  c.sweep.eps = r.number_array("sweep.eps", c.sweep.eps);
  c.sweep.include_inviscid = r.flag("sweep.include_inviscid", c.sweep.include_inviscid);
  c.sweep.modes = r.string_array("sweep.modes", c.sweep.modes);
  c.sweep.bc_kinds = r.string_array("sweep.bc_kinds", c.sweep.bc_kinds);
  c.sweep.max_samples = r.integer("sweep.max_samples", c.sweep.max_samples);
  c.sweep.func_order = r.integer("sweep.func_order", c.sweep.func_order);
  c.sweep.bl_z_frac = r.number("sweep.bl_z_frac", c.sweep.bl_z_frac);
  c.sweep.jobs = r.integer("sweep.jobs", c.sweep.jobs);

  r.finish();
  c.validate();
  return c;
}

// ---------------------------------------------------------------------------
// Validation and canonical form
// ---------------------------------------------------------------------------

inline void RunConfig::validate() const {
  if (nx > 4096 || ny > 4096 || nz > 1 << 20)
    throw Error(ErrorKind::ConfigError, "grid dimensions are implausibly large");
  (void)make_grid(mode, static_cast<int>(nx), static_cast<int>(ny), static_cast<int>(nz), Lx, Ly,
                  Lz);  // throws with grid.* key paths
  material.validate();

  try {
    (void)FieldExpr(rho0);
  } catch (const Error& e) {
    throw Error(ErrorKind::ConfigError, std::string("material.rho0: ") + e.message());
  }
  const char* init_keys[6] = {"init.phi1", "init.phi2", "init.phi3",
                              "init.v1",   "init.v2",   "init.v3"};
  const std::string* init_vals[6] = {&init.phi[0], &init.phi[1], &init.phi[2],
                                     &init.v[0],   &init.v[1],   &init.v[2]};
  for (int k = 0; k < 6; ++k) {
    try {
      (void)FieldExpr(*init_vals[k]);
    } catch (const Error& e) {
      throw Error(ErrorKind::ConfigError, std::string(init_keys[k]) + ": " + e.message());
    }
  }

  if (bc_alpha >= 0.0 && !std::isfinite(bc_alpha))
    throw Error(ErrorKind::ConfigError, "bc.alpha must be finite");
  if (!(t_final > 0.0) || !std::isfinite(t_final))
    throw Error(ErrorKind::ConfigError, "integrator.t_final must be > 0");
  if (!(cfl_adv > 0.0) || !(cfl_adv <= 1.0))
    throw Error(ErrorKind::ConfigError, "integrator.cfl_adv must lie in (0, 1]");
  if (!(cfl_visc > 0.0) || !(cfl_visc <= 1.0))
    throw Error(ErrorKind::ConfigError, "integrator.cfl_visc must lie in (0, 1]");
  if (max_steps < 1) throw Error(ErrorKind::ConfigError, "integrator.max_steps must be >= 1");
  if (!(fixed_dt >= 0.0) || !std::isfinite(fixed_dt))
    throw Error(ErrorKind::ConfigError, "integrator.fixed_dt must be finite and >= 0");
  if (output.snapshot_every < 0)
    throw Error(ErrorKind::ConfigError, "output.snapshot_every must be >= 0");
  if (output.diagnostics_every < 1)
    throw Error(ErrorKind::ConfigError, "output.diagnostics_every must be >= 1");

  // Sweep block: enum names must parse and the derived plan must validate.
  for (const std::string& m : sweep.modes) (void)parse_sweep_mode(m);
  for (const std::string& b : sweep.bc_kinds) {
    try {
      (void)parse_bc_kind(b);
    } catch (const Error&) {
      throw Error(ErrorKind::ConfigError,
                  "sweep.bc_kinds entries must be \"no_slip\" or \"navier_slip\", got \"" + b +
                      "\"");
    }
  }
  if (sweep.jobs < 1) throw Error(ErrorKind::ConfigError, "sweep.jobs must be >= 1");
  SweepPlan plan;
  plan.eps_list = sweep.eps;
  plan.include_inviscid = sweep.include_inviscid;
  plan.max_samples = static_cast<int>(sweep.max_samples);
  plan.func_order = static_cast<int>(sweep.func_order);
  plan.bl_z_frac = sweep.bl_z_frac;
  try {
    plan.validate();
  } catch (const Error& e) {
    throw Error(ErrorKind::ConfigError, std::string("sweep: ") + e.message());
  }
}

/// Deterministic serialization of everything that determines the computed
/// trajectory: every physics/numerics key in a fixed order, numbers in
/// %.17g, expressions resolved (no preset indirection).  Execution-only
/// knobs (the [output] block and sweep.jobs) are deliberately omitted, so
/// artifacts produced with different job counts or output paths share one
/// configuration hash.  The text re-parses to an equivalent config:
/// parse_config(c.canonical_toml()).canonical_toml() == c.canonical_toml().
inline std::string RunConfig::canonical_toml() const {
  using detail::fmt_g17;
  using detail::toml_quote;
  std::string s;
  s += "[grid]\n";
  s += "mode = " + toml_quote(to_string(mode)) + "\n";
  s += "nx = " + std::to_string(nx) + "\n";
  s += "ny = " + std::to_string(ny) + "\n";
  s += "nz = " + std::to_string(nz) + "\n";
  s += "Lx = " + fmt_g17(Lx) + "\n";
  s += "Ly = " + fmt_g17(Ly) + "\n";
  s += "Lz = " + fmt_g17(Lz) + "\n";
  s += "\n[material]\n";
  s += "gamma = " + fmt_g17(material.gamma) + "\n";
  s += "mu = " + fmt_g17(material.mu) + "\n";
  s += "lambda = " + fmt_g17(material.lambda) + "\n";
  s += "alpha = " + fmt_g17(material.alpha) + "\n";
  s += "eps = " + fmt_g17(material.eps) + "\n";
  s += std::string("elastic_on = ") + (material.elastic_on ? "true" : "false") + "\n";
  s += "rho0 = " + toml_quote(rho0) + "\n";
  s += "\n[bc]\n";
  s += "kind = " + toml_quote(to_string(bc_kind)) + "\n";
  s += "alpha = " + fmt_g17(effective_bc_alpha()) + "\n";
  s += "\n[integrator]\n";
  s += "scheme = " + toml_quote(to_string(scheme)) + "\n";
  s += "t_final = " + fmt_g17(t_final) + "\n";
  s += "cfl_adv = " + fmt_g17(cfl_adv) + "\n";
  s += "cfl_visc = " + fmt_g17(cfl_visc) + "\n";
  s += "max_steps = " + std::to_string(max_steps) + "\n";
  s += "fixed_dt = " + fmt_g17(fixed_dt) + "\n";
  s += "\n[init]\n";
  s += "phi1 = " + toml_quote(init.phi[0]) + "\n";
  s += "phi2 = " + toml_quote(init.phi[1]) + "\n";
  s += "phi3 = " + toml_quote(init.phi[2]) + "\n";
  s += "v1 = " + toml_quote(init.v[0]) + "\n";
  s += "v2 = " + toml_quote(init.v[1]) + "\n";
  s += "v3 = " + toml_quote(init.v[2]) + "\n";
  s += "\n[sweep]\n";
  s += "eps = [";
  for (std::size_t i = 0; i < sweep.eps.size(); ++i)
    s += (i ? ", " : "") + fmt_g17(sweep.eps[i]);
  s += "]\n";
  s += std::string("include_inviscid = ") + (sweep.include_inviscid ? "true" : "false") + "\n";
  s += "modes = [";
  for (std::size_t i = 0; i < sweep.modes.size(); ++i)
    s += (i ? ", " : "") + toml_quote(sweep.modes[i]);
  s += "]\n";
  s += "bc_kinds = [";
  const std::vector<std::string> bcs =
      sweep.bc_kinds.empty() ? std::vector<std::string>{to_string(bc_kind)} : sweep.bc_kinds;
  for (std::size_t i = 0; i < bcs.size(); ++i) s += (i ? ", " : "") + toml_quote(bcs[i]);
  s += "]\n";
  s += "max_samples = " + std::to_string(sweep.max_samples) + "\n";
  s += "func_order = " + std::to_string(sweep.func_order) + "\n";
  s += "bl_z_frac = " + fmt_g17(sweep.bl_z_frac) + "\n";
  return s;
}

// ---------------------------------------------------------------------------
// Builders
// ---------------------------------------------------------------------------

inline Grid build_grid(const RunConfig& c) {
  return make_grid(c.mode, static_cast<int>(c.nx), static_cast<int>(c.ny),
                   static_cast<int>(c.nz), c.Lx, c.Ly, c.Lz);
}

inline ScalarField build_rho0(const RunConfig& c, const Grid& g) {
  const FieldExpr f(c.rho0);
  ScalarField rho0 = make_scalar(g);
  for (int k = 0; k < g.nz; ++k)
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i)
        rho0[g.idx(i, j, k)] = f.eval(g.x(i), g.y(j), g.z(k));
  validate_reference_density(rho0);
  return rho0;
}

inline FlowMapState build_initial_state(const RunConfig& c, const Grid& g) {
  std::array<FieldExpr, 3> phi{FieldExpr(c.init.phi[0]), FieldExpr(c.init.phi[1]),
                               FieldExpr(c.init.phi[2])};
  std::array<FieldExpr, 3> vel{FieldExpr(c.init.v[0]), FieldExpr(c.init.v[1]),
                               FieldExpr(c.init.v[2])};
  FlowMapState st(g);
  for (int k = 0; k < g.nz; ++k)
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) {
        const std::size_t n = g.idx(i, j, k);
        const double x = g.x(i), y = g.y(j), z = g.z(k);
        st.eta.c[0][n] = x + phi[0].eval(x, y, z);
        st.eta.c[1][n] = y + phi[1].eval(x, y, z);
        st.eta.c[2][n] = z + phi[2].eval(x, y, z);
        st.vel.c[0][n] = vel[0].eval(x, y, z);
        st.vel.c[1][n] = vel[1].eval(x, y, z);
        st.vel.c[2][n] = vel[2].eval(x, y, z);
      }
  st.t = 0.0;
  return st;
}

inline BoundaryCondition build_bc(const RunConfig& c) {
  return BoundaryCondition{c.bc_kind, c.effective_bc_alpha()};
}

inline IntegratorConfig build_integrator(const RunConfig& c) {
  IntegratorConfig ic;
  ic.scheme = c.scheme;
  ic.cfl_adv = c.cfl_adv;
  ic.cfl_visc = c.cfl_visc;
  ic.t_final = c.t_final;
  ic.max_steps = c.max_steps;
  ic.snapshot_every = static_cast<int>(std::min<long>(c.output.snapshot_every, 1 << 30));
  ic.fixed_dt = c.fixed_dt;
  return ic;
}

inline SweepPlan build_sweep_plan(const RunConfig& c) {
  SweepPlan plan;
  plan.eps_list = c.sweep.eps;
  plan.include_inviscid = c.sweep.include_inviscid;
  plan.modes.clear();
  for (const std::string& m : c.sweep.modes) plan.modes.push_back(parse_sweep_mode(m));
  plan.bc_kinds.clear();
  if (c.sweep.bc_kinds.empty()) {
    plan.bc_kinds.push_back(c.bc_kind);
  } else {
    for (const std::string& b : c.sweep.bc_kinds) plan.bc_kinds.push_back(parse_bc_kind(b));
  }
  plan.jobs = static_cast<int>(c.sweep.jobs);
  plan.max_samples = static_cast<int>(c.sweep.max_samples);
  plan.func_order = static_cast<int>(c.sweep.func_order);
  plan.bl_z_frac = c.sweep.bl_z_frac;
  plan.validate();
  return plan;
}

// ---------------------------------------------------------------------------
// Full-file presets (the same texts are shipped under configs/)
// ---------------------------------------------------------------------------

/// Returns the TOML text of a named full configuration.  "standard_noslip"
/// and "standard_navier" pin the reference verification setup: a height-1
/// column, 257 nodes, gamma 1.4, mu 1, lambda 0, alpha 1, unit reference
/// density, identity initial map, the standard tangential bump, t_final 0.5.
inline std::string preset_config_text(const std::string& name) {
  const char* bc = nullptr;
  if (name == "standard_noslip") bc = "no_slip";
  if (name == "standard_navier") bc = "navier_slip";
  if (bc) {
    std::string s;
    s += "[grid]\nmode = \"column1d\"\nnz = 257\nLz = 1.0\n\n";
    s += "[material]\ngamma = 1.4\nmu = 1.0\nlambda = 0.0\nalpha = 1.0\neps = 0.01\n";
    s += "elastic_on = true\nrho0 = \"1\"\n\n";
    s += std::string("[bc]\nkind = \"") + bc + "\"\nalpha = 1.0\n\n";
    s += "[integrator]\nscheme = \"imex_viscous\"\nt_final = 0.5\n\n";
    s += "[init]\npreset = \"standard\"\n\n";
    s += "[sweep]\neps = [1e-1, 3.1622776601683794e-2, 1e-2, 3.1622776601683794e-3, 1e-3]\n";
    s += std::string("bc_kinds = [\"") + bc + "\"]\nmodes = [\"viscoelastic\"]\n";
    return s;
  }
  if (name == "compress") {
    return "[grid]\nmode = \"column1d\"\nnz = 257\nLz = 1.0\n\n"
           "[material]\ngamma = 1.4\nmu = 1.0\nlambda = 0.3\nalpha = 1.0\neps = 0.01\n"
           "elastic_on = true\nrho0 = \"1\"\n\n"
           "[bc]\nkind = \"no_slip\"\nalpha = 1.0\n\n"
           "[integrator]\nscheme = \"imex_viscous\"\nt_final = 0.5\n\n"
           "[init]\npreset = \"compress\"\n";
  }
  if (name == "slipstream") {
    return "[grid]\nmode = \"column1d\"\nnz = 129\nLz = 1.0\n\n"
           "[material]\ngamma = 1.4\nmu = 1.0\nlambda = 0.0\nalpha = 1.0\neps = 0.01\n"
           "elastic_on = false\nrho0 = \"1\"\n\n"
           "[bc]\nkind = \"no_slip\"\nalpha = 1.0\n\n"
           "[integrator]\nscheme = \"imex_viscous\"\nt_final = 2.2\n\n"
           "[init]\npreset = \"slipstream\"\n\n"
           "[sweep]\neps = [3.1622776601683794e-2, 1e-2, 3.1622776601683794e-3]\n"
           "modes = [\"ns_contrast\", \"viscoelastic\"]\nbc_kinds = [\"no_slip\"]\n";
  }
  if (name == "wide_bump") {
    return "[grid]\nmode = \"column1d\"\nnz = 257\nLz = 2.0\n\n"
           "[material]\ngamma = 1.4\nmu = 1.0\nlambda = 0.0\nalpha = 1.0\neps = 0.0015\n"
           "elastic_on = true\nrho0 = \"1\"\n\n"
           "[bc]\nkind = \"no_slip\"\nalpha = 1.0\n\n"
           "[integrator]\nscheme = \"imex_viscous\"\nt_final = 2.2\n\n"
           "[init]\npreset = \"wide_bump\"\n\n"
           "[sweep]\neps = [1.5e-3, 7.5e-4, 3.75e-4, 1.875e-4]\n"
           "modes = [\"viscoelastic\"]\nbc_kinds = [\"no_slip\", \"navier_slip\"]\n";
  }
  throw Error(ErrorKind::ConfigError,
              "unknown config preset \"" + name +
                  "\" (valid: standard_noslip, standard_navier, compress, slipstream, wide_bump)");
}

inline RunConfig preset_config(const std::string& name) {
  return parse_config(preset_config_text(name));
}

}  // namespace vve
