#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace druopf {

/// constant + sum(coef * x[index])
struct AffineExpr {
  std::vector<std::pair<std::size_t, double>> terms;
  double constant = 0.0;

  AffineExpr() = default;
  explicit AffineExpr(double c) : constant(c) {}
  static AffineExpr var(std::size_t index, double coef = 1.0);

  AffineExpr& add(std::size_t index, double coef);
  AffineExpr& add(const AffineExpr& other, double scale = 1.0);
  double eval(const std::vector<double>& x) const;
};

enum class Relation { Equal, LessEqual };

/// expr (= | <=) rhs
struct AffineRow {
  AffineExpr expr;
  Relation relation = Relation::Equal;
  double rhs = 0.0;
  std::string tag;
  std::string name;
};

/// ||vec|| <= scalar
struct SocCone {
  std::vector<AffineExpr> vec;
  AffineExpr scalar;
  std::string tag;
  std::string name;
};

struct ConicProgram {
  std::vector<std::string> variables;
  std::vector<AffineRow> rows;
  std::vector<SocCone> cones;
  AffineExpr objective;
  std::string objective_tag = "objective";

  std::size_t add_variable(std::string name);
  std::size_t n_variables() const { return variables.size(); }
  void add_row(AffineExpr expr, Relation rel, double rhs, std::string tag, std::string name = {});
  void add_cone(std::vector<AffineExpr> vec, AffineExpr scalar, std::string tag, std::string name = {});

  /// Throws Error{Schema} on out-of-range indices, non-finite coefficients or
  /// names containing whitespace.
  void validate() const;
};

/// Largest violation of any row or cone at x (0 when x is feasible).
double max_violation(const ConicProgram& program, const std::vector<double>& x);

/// Plain-text interchange format, one record per line:
///
///   druopf-conic 1
///   variables N            followed by N names
///   objective TAG EXPR
///   rows M                 followed by M lines: TAG NAME eq|le RHS EXPR
///   cones K                followed by K headers: TAG NAME DIM,
///                          each followed by DIM+1 EXPR lines (scalar first)
///   end
///
/// EXPR is `CONSTANT NTERMS (INDEX COEF)*`; an empty name is written as `-`.
/// Numbers are written with 17 significant digits so a round trip is exact.
void write_conic_text(std::ostream& out, const ConicProgram& program);
ConicProgram read_conic_text(std::istream& in);

}  // namespace druopf
