#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"

namespace esrate {

using Vector = std::vector<double>;

/// Strictly increasing scalar maps applied on top of a canonical objective.
class Transform {
 public:
  enum class Kind { Identity, AffinePos, CubeShift, ExpMinusOne };

  static Transform identity() { return Transform(Kind::Identity, 1.0, 0.0); }
  //! y -> a*y + b, requires a > 0.
  static Transform affine(double a, double b);
  //! y -> y^3 + y
  static Transform cube_shift() { return Transform(Kind::CubeShift, 1.0, 0.0); }
  //! y -> e^y - 1, evaluated with expm1 so small values keep full precision.
  //! Saturates to +inf above y ~ 709.78, so order is only preserved below that.
  static Transform exp_minus_one() { return Transform(Kind::ExpMinusOne, 1.0, 0.0); }

  //! Accepts "identity", "cube_shift", "exp_minus_one", "affine(a,b)".
  static Transform parse(std::string_view text);

  Kind kind() const { return kind_; }
  double slope() const { return a_; }
  double offset() const { return b_; }

  double apply(double y) const;
  std::string name() const;

  friend bool operator==(const Transform&, const Transform&) = default;

 private:
  Transform(Kind kind, double a, double b) : kind_(kind), a_(a), b_(b) {}

  Kind kind_;
  double a_;
  double b_;
};

enum class HessianFamily { H1, H2, H3 };

std::string_view family_name(HessianFamily family);
HessianFamily parse_family(std::string_view text);

class ObjectiveSpec;

/// f(x) = 1/2 sum_i h_i x_i^2
struct QuadraticDiag {
  Vector h;
};

/// f(x) = 1/2 sum_i b_i x_i^2 + (M / omega^2) sum_i (1 - cos(omega x_i)).
/// The perturbation Hessian is diag(M cos(omega x_i)), so the spectrum stays
/// in [min b - M, max b + M].
struct QuadraticPerturbed {
  Vector base;
  double amplitude;  // M
  double frequency;  // omega
};

/// h(x) = g(f(x - x_opt)) for a non-composite f.
struct Composite {
  std::shared_ptr<const ObjectiveSpec> base;
  Transform transform;
  Vector x_opt;
};

/*!
 * A strongly convex, Lipschitz-smooth test function with known moduli.
 *
 * Non-composite kinds have their unique minimum at the origin with value 0.
 * Specs are immutable once constructed and safe to share between threads.
 */
class ObjectiveSpec {
 public:
  using Kind = std::variant<QuadraticDiag, QuadraticPerturbed, Composite>;

  struct FamilyTag {
    HessianFamily family;
    int kappa;
  };

  static ObjectiveSpec diagonal(Vector h, std::string label = "diag");
  static ObjectiveSpec perturbed(Vector base, double amplitude, double frequency,
                                 std::string label = "perturbed");

  std::size_t dim() const { return dim_; }
  const Kind& kind() const { return kind_; }
  const std::string& label() const { return label_; }
  const std::optional<FamilyTag>& family() const { return family_; }

  bool is_composite() const { return std::holds_alternative<Composite>(kind_); }
  //! True for QuadraticDiag and for composites built on one.
  bool is_quadratic() const;

  //! Strong convexity modulus L of the canonical (pre-transform) function.
  double strong_convexity() const { return L_; }
  //! Lipschitz smoothness modulus U of the canonical function.
  double smoothness() const { return U_; }
  std::optional<double> trace_hessian() const;
  //! Tr(H^2), quadratic kinds only.
  std::optional<double> trace_hessian_squared() const;
  //! Diagonal Hessian entries, quadratic kinds only.
  const Vector* hessian_diagonal() const;

  Vector optimum() const;
  //! For composites the wrapped canonical spec; otherwise *this.
  const ObjectiveSpec& canonical() const;

  double eval(std::span<const double> x) const;
  //! Canonical value f(x - x_opt) without the monotone transform.
  double canonical_eval(std::span<const double> x) const;
  //! Exact gradient. Composite kinds throw Unsupported.
  Vector grad(std::span<const double> x) const;

  std::string describe() const;

 private:
  friend ObjectiveSpec hessian_family(HessianFamily, std::size_t, int);
  friend ObjectiveSpec make_composite(const ObjectiveSpec&, Transform, Vector);
  friend ObjectiveSpec perturbed_family(HessianFamily, std::size_t, int, double, double);

  ObjectiveSpec(Kind kind, std::size_t dim, double L, double U, std::string label);

  Kind kind_;
  std::size_t dim_;
  double L_;
  double U_;
  std::string label_;
  std::optional<FamilyTag> family_;
};

/// H1 = diag(1, 10^k, ..., 10^k), H2 = diag(10^{k i/(d-1)}), H3 = diag(1, ..., 1, 10^k).
ObjectiveSpec hessian_family(HessianFamily family, std::size_t d, int kappa);

/// Perturbed quadratic whose base diagonal is a Hessian family member.
ObjectiveSpec perturbed_family(HessianFamily family, std::size_t d, int kappa, double amplitude,
                               double frequency);

ObjectiveSpec make_composite(const ObjectiveSpec& base, Transform g, Vector x_opt);

nlohmann::json to_json(const ObjectiveSpec& spec);
ObjectiveSpec objective_from_json(const nlohmann::json& j);

double norm(std::span<const double> x);
double dot(std::span<const double> a, std::span<const double> b);

}  // namespace esrate
