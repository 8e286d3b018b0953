#include "druopf/conic.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "druopf/error.hpp"

namespace druopf {

AffineExpr AffineExpr::var(std::size_t index, double coef) {
  AffineExpr e;
  e.terms.emplace_back(index, coef);
  return e;
}

AffineExpr& AffineExpr::add(std::size_t index, double coef) {
  terms.emplace_back(index, coef);
  return *this;
}

AffineExpr& AffineExpr::add(const AffineExpr& other, double scale) {
  for (const auto& [i, c] : other.terms) terms.emplace_back(i, scale * c);
  constant += scale * other.constant;
  return *this;
}

double AffineExpr::eval(const std::vector<double>& x) const {
  double v = constant;
  for (const auto& [i, c] : terms) v += c * x[i];
  return v;
}

std::size_t ConicProgram::add_variable(std::string name) {
  variables.push_back(std::move(name));
  return variables.size() - 1;
}

void ConicProgram::add_row(AffineExpr expr, Relation rel, double rhs, std::string tag, std::string name) {
  rows.push_back({std::move(expr), rel, rhs, std::move(tag), std::move(name)});
}

void ConicProgram::add_cone(std::vector<AffineExpr> vec, AffineExpr scalar, std::string tag, std::string name) {
  cones.push_back({std::move(vec), std::move(scalar), std::move(tag), std::move(name)});
}

namespace {

bool has_space(const std::string& s) {
  return std::any_of(s.begin(), s.end(), [](unsigned char ch) { return std::isspace(ch) != 0; });
}

void check_expr(const AffineExpr& e, std::size_t n, const std::string& where) {
  if (!std::isfinite(e.constant)) throw Error(ErrorKind::Schema, where + ": non-finite constant");
  for (const auto& [i, c] : e.terms) {
    if (i >= n) throw Error(ErrorKind::Schema, where + ": undeclared variable " + std::to_string(i));
    if (!std::isfinite(c)) throw Error(ErrorKind::Schema, where + ": non-finite coefficient");
  }
}

void check_label(const std::string& s, const std::string& where) {
  if (has_space(s)) throw Error(ErrorKind::Schema, where + ": label '" + s + "' contains whitespace");
}

}  // namespace

void ConicProgram::validate() const {
  const std::size_t n = variables.size();
  for (const auto& v : variables) {
    if (v.empty()) throw Error(ErrorKind::Schema, "empty variable name");
    check_label(v, "variable");
  }
  check_expr(objective, n, "objective");
  check_label(objective_tag, "objective");
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const std::string where = "row " + std::to_string(r);
    check_expr(rows[r].expr, n, where);
    if (!std::isfinite(rows[r].rhs)) throw Error(ErrorKind::Schema, where + ": non-finite rhs");
    if (rows[r].tag.empty()) throw Error(ErrorKind::Schema, where + ": missing tag");
    check_label(rows[r].tag, where);
    check_label(rows[r].name, where);
  }
  for (std::size_t k = 0; k < cones.size(); ++k) {
    const std::string where = "cone " + std::to_string(k);
    if (cones[k].vec.empty()) throw Error(ErrorKind::Schema, where + ": empty vector part");
    for (const auto& e : cones[k].vec) check_expr(e, n, where);
    check_expr(cones[k].scalar, n, where);
    if (cones[k].tag.empty()) throw Error(ErrorKind::Schema, where + ": missing tag");
    check_label(cones[k].tag, where);
    check_label(cones[k].name, where);
  }
}

double max_violation(const ConicProgram& program, const std::vector<double>& x) {
  if (x.size() != program.n_variables()) throw Error(ErrorKind::Domain, "point has wrong dimension");
  double worst = 0.0;
  for (const auto& row : program.rows) {
    const double d = row.expr.eval(x) - row.rhs;
    worst = std::max(worst, row.relation == Relation::Equal ? std::abs(d) : d);
  }
  for (const auto& cone : program.cones) {
    double norm2 = 0.0;
    for (const auto& e : cone.vec) {
      const double v = e.eval(x);
      norm2 += v * v;
    }
    worst = std::max(worst, std::sqrt(norm2) - cone.scalar.eval(x));
  }
  return worst;
}

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_expr(std::ostream& out, const AffineExpr& e) {
  out << num(e.constant) << ' ' << e.terms.size();
  for (const auto& [i, c] : e.terms) out << ' ' << i << ' ' << num(c);
}

std::string label(const std::string& s) { return s.empty() ? "-" : s; }
std::string unlabel(const std::string& s) { return s == "-" ? std::string{} : s; }

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  std::string word() {
    std::string w;
    if (!(in_ >> w)) fail("unexpected end of input");
    return w;
  }
  void expect(const std::string& w) {
    if (word() != w) fail("expected '" + w + "'");
  }
  double real() {
    const std::string w = word();
    try {
      std::size_t pos = 0;
      const double v = std::stod(w, &pos);
      if (pos != w.size()) fail("bad number '" + w + "'");
      return v;
    } catch (const std::logic_error&) {
      fail("bad number '" + w + "'");
    }
    return 0.0;
  }
  std::size_t count() {
    const double v = real();
    if (v < 0 || v != std::floor(v)) fail("bad count");
    return static_cast<std::size_t>(v);
  }
  AffineExpr expr() {
    AffineExpr e;
    e.constant = real();
    const std::size_t n = count();
    e.terms.reserve(n);
    for (std::size_t t = 0; t < n; ++t) {
      const std::size_t i = count();
      e.terms.emplace_back(i, real());
    }
    return e;
  }
  [[noreturn]] void fail(const std::string& msg) { throw Error(ErrorKind::Schema, "conic text: " + msg); }

 private:
  std::istream& in_;
};

}  // namespace

void write_conic_text(std::ostream& out, const ConicProgram& program) {
  out << "druopf-conic 1\n";
  out << "variables " << program.variables.size() << '\n';
  for (const auto& v : program.variables) out << v << '\n';
  out << "objective " << label(program.objective_tag) << ' ';
  write_expr(out, program.objective);
  out << '\n';
  out << "rows " << program.rows.size() << '\n';
  for (const auto& r : program.rows) {
    out << label(r.tag) << ' ' << label(r.name) << ' ' << (r.relation == Relation::Equal ? "eq" : "le") << ' '
        << num(r.rhs) << ' ';
    write_expr(out, r.expr);
    out << '\n';
  }
  out << "cones " << program.cones.size() << '\n';
  for (const auto& c : program.cones) {
    out << label(c.tag) << ' ' << label(c.name) << ' ' << c.vec.size() << '\n';
    write_expr(out, c.scalar);
    out << '\n';
    for (const auto& e : c.vec) {
      write_expr(out, e);
      out << '\n';
    }
  }
  out << "end\n";
}

ConicProgram read_conic_text(std::istream& in) {
  Reader rd(in);
  ConicProgram p;
  rd.expect("druopf-conic");
  if (rd.word() != "1") rd.fail("unsupported version");
  rd.expect("variables");
  const std::size_t nv = rd.count();
  for (std::size_t i = 0; i < nv; ++i) p.variables.push_back(rd.word());
  rd.expect("objective");
  p.objective_tag = unlabel(rd.word());
  p.objective = rd.expr();
  rd.expect("rows");
  const std::size_t nr = rd.count();
  for (std::size_t r = 0; r < nr; ++r) {
    AffineRow row;
    row.tag = unlabel(rd.word());
    row.name = unlabel(rd.word());
    const std::string rel = rd.word();
    if (rel == "eq") {
      row.relation = Relation::Equal;
    } else if (rel == "le") {
      row.relation = Relation::LessEqual;
    } else {
      rd.fail("bad relation '" + rel + "'");
    }
    row.rhs = rd.real();
    row.expr = rd.expr();
    p.rows.push_back(std::move(row));
  }
  rd.expect("cones");
  const std::size_t nc = rd.count();
  for (std::size_t k = 0; k < nc; ++k) {
    SocCone cone;
    cone.tag = unlabel(rd.word());
    cone.name = unlabel(rd.word());
    const std::size_t dim = rd.count();
    cone.scalar = rd.expr();
    for (std::size_t d = 0; d < dim; ++d) cone.vec.push_back(rd.expr());
    p.cones.push_back(std::move(cone));
  }
  rd.expect("end");
  p.validate();
  return p;
}

}  // namespace druopf
