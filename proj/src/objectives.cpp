#include "esrate/objectives.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <sstream>

#include "esrate/error.hpp"

namespace esrate {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require_dim(std::span<const double> x, std::size_t dim) {
  if (x.size() != dim) {
    throw InvalidInput("dimension mismatch: expected " + std::to_string(dim) + ", got " +
                       std::to_string(x.size()));
  }
}

double parse_double(std::string_view text) {
  while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
  while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw InvalidInput("not a number: '" + std::string(text) + "'");
  }
  return value;
}

// Canonical value with an optional shift (empty span means no shift).
double eval_base(const ObjectiveSpec::Kind& kind, std::span<const double> x,
                 std::span<const double> shift) {
  auto at = [&](std::size_t i) { return shift.empty() ? x[i] : x[i] - shift[i]; };
  return std::visit(
      Overloaded{
          [&](const QuadraticDiag& q) {
            double sum = 0.0;
            for (std::size_t i = 0; i < q.h.size(); ++i) {
              const double xi = at(i);
              sum += q.h[i] * xi * xi;
            }
            return 0.5 * sum;
          },
          [&](const QuadraticPerturbed& q) {
            double quad = 0.0;
            double wave = 0.0;
            for (std::size_t i = 0; i < q.base.size(); ++i) {
              const double xi = at(i);
              quad += q.base[i] * xi * xi;
              // 1 - cos(t) = 2 sin^2(t/2), exact near the optimum
              const double half = std::sin(0.5 * q.frequency * xi);
              wave += 2.0 * half * half;
            }
            return 0.5 * quad + q.amplitude / (q.frequency * q.frequency) * wave;
          },
          [&](const Composite&) -> double { throw InvalidInput("nested composite"); },
      },
      kind);
}

}  // namespace

// ---------------------------------------------------------------------------
// Transform

Transform Transform::affine(double a, double b) {
  if (!(a > 0.0) || !std::isfinite(a) || !std::isfinite(b)) {
    throw InvalidInput("affine transform needs a > 0 and finite b");
  }
  return Transform(Kind::AffinePos, a, b);
}

Transform Transform::parse(std::string_view text) {
  if (text == "identity") return identity();
  if (text == "cube_shift") return cube_shift();
  if (text == "exp_minus_one") return exp_minus_one();
  constexpr std::string_view prefix = "affine(";
  if (text.starts_with(prefix) && text.ends_with(")")) {
    auto inner = text.substr(prefix.size(), text.size() - prefix.size() - 1);
    const auto comma = inner.find(',');
    if (comma == std::string_view::npos) throw InvalidInput("affine transform needs 'affine(a,b)'");
    return affine(parse_double(inner.substr(0, comma)), parse_double(inner.substr(comma + 1)));
  }
  throw InvalidInput("unknown transform '" + std::string(text) + "'");
}

double Transform::apply(double y) const {
  switch (kind_) {
    case Kind::Identity:
      return y;
    case Kind::AffinePos:
      return a_ * y + b_;
    case Kind::CubeShift:
      return y * y * y + y;
    case Kind::ExpMinusOne:
      return std::expm1(y);
  }
  return y;
}

std::string Transform::name() const {
  switch (kind_) {
    case Kind::Identity:
      return "identity";
    case Kind::AffinePos: {
      std::ostringstream out;
      out.precision(17);
      out << "affine(" << a_ << "," << b_ << ")";
      return out.str();
    }
    case Kind::CubeShift:
      return "cube_shift";
    case Kind::ExpMinusOne:
      return "exp_minus_one";
  }
  return "identity";
}

std::string_view family_name(HessianFamily family) {
  switch (family) {
    case HessianFamily::H1:
      return "h1";
    case HessianFamily::H2:
      return "h2";
    case HessianFamily::H3:
      return "h3";
  }
  return "h1";
}

HessianFamily parse_family(std::string_view text) {
  if (text == "h1") return HessianFamily::H1;
  if (text == "h2") return HessianFamily::H2;
  if (text == "h3") return HessianFamily::H3;
  throw InvalidInput("unknown Hessian family '" + std::string(text) + "'");
}

// ---------------------------------------------------------------------------
// ObjectiveSpec

ObjectiveSpec::ObjectiveSpec(Kind kind, std::size_t dim, double L, double U, std::string label)
    : kind_(std::move(kind)), dim_(dim), L_(L), U_(U), label_(std::move(label)) {}

ObjectiveSpec ObjectiveSpec::diagonal(Vector h, std::string label) {
  if (h.empty()) throw InvalidInput("diagonal Hessian must be nonempty");
  for (double v : h) {
    if (!(v > 0.0) || !std::isfinite(v)) throw InvalidInput("Hessian entries must be positive");
  }
  const auto [lo, hi] = std::minmax_element(h.begin(), h.end());
  const double L = *lo;
  const double U = *hi;
  const std::size_t dim = h.size();
  return ObjectiveSpec(QuadraticDiag{std::move(h)}, dim, L, U, std::move(label));
}

ObjectiveSpec ObjectiveSpec::perturbed(Vector base, double amplitude, double frequency,
                                       std::string label) {
  if (base.empty()) throw InvalidInput("perturbed base must be nonempty");
  if (!(amplitude >= 0.0) || !std::isfinite(amplitude)) throw InvalidInput("perturbation M must be >= 0");
  if (!(frequency > 0.0) || !std::isfinite(frequency)) throw InvalidInput("perturbation omega must be > 0");
  for (double v : base) {
    if (!(v > 0.0) || !std::isfinite(v)) throw InvalidInput("base entries must be positive");
  }
  const auto [lo, hi] = std::minmax_element(base.begin(), base.end());
  const double L = *lo - amplitude;
  const double U = *hi + amplitude;
  if (!(L > 0.0)) throw InvalidInput("perturbation amplitude must be below the smallest base entry");
  const std::size_t dim = base.size();
  return ObjectiveSpec(QuadraticPerturbed{std::move(base), amplitude, frequency}, dim, L, U,
                       std::move(label));
}

bool ObjectiveSpec::is_quadratic() const {
  if (const auto* c = std::get_if<Composite>(&kind_)) return c->base->is_quadratic();
  return std::holds_alternative<QuadraticDiag>(kind_);
}

const Vector* ObjectiveSpec::hessian_diagonal() const {
  if (const auto* c = std::get_if<Composite>(&kind_)) return c->base->hessian_diagonal();
  if (const auto* q = std::get_if<QuadraticDiag>(&kind_)) return &q->h;
  return nullptr;
}

std::optional<double> ObjectiveSpec::trace_hessian() const {
  const Vector* h = hessian_diagonal();
  if (h == nullptr) return std::nullopt;
  return std::accumulate(h->begin(), h->end(), 0.0);
}

std::optional<double> ObjectiveSpec::trace_hessian_squared() const {
  const Vector* h = hessian_diagonal();
  if (h == nullptr) return std::nullopt;
  double sum = 0.0;
  for (double v : *h) sum += v * v;
  return sum;
}

Vector ObjectiveSpec::optimum() const {
  if (const auto* c = std::get_if<Composite>(&kind_)) return c->x_opt;
  return Vector(dim_, 0.0);
}

const ObjectiveSpec& ObjectiveSpec::canonical() const {
  if (const auto* c = std::get_if<Composite>(&kind_)) return *c->base;
  return *this;
}

double ObjectiveSpec::eval(std::span<const double> x) const {
  require_dim(x, dim_);
  if (const auto* c = std::get_if<Composite>(&kind_)) {
    return c->transform.apply(eval_base(c->base->kind_, x, c->x_opt));
  }
  return eval_base(kind_, x, {});
}

double ObjectiveSpec::canonical_eval(std::span<const double> x) const {
  require_dim(x, dim_);
  if (const auto* c = std::get_if<Composite>(&kind_)) return eval_base(c->base->kind_, x, c->x_opt);
  return eval_base(kind_, x, {});
}

Vector ObjectiveSpec::grad(std::span<const double> x) const {
  require_dim(x, dim_);
  return std::visit(
      Overloaded{
          [&](const QuadraticDiag& q) {
            Vector g(dim_);
            for (std::size_t i = 0; i < dim_; ++i) g[i] = q.h[i] * x[i];
            return g;
          },
          [&](const QuadraticPerturbed& q) {
            Vector g(dim_);
            for (std::size_t i = 0; i < dim_; ++i) {
              g[i] = q.base[i] * x[i] + q.amplitude / q.frequency * std::sin(q.frequency * x[i]);
            }
            return g;
          },
          [&](const Composite&) -> Vector {
            throw Unsupported("gradient of a composite objective is not available");
          },
      },
      kind_);
}

std::string ObjectiveSpec::describe() const {
  std::ostringstream out;
  out << label_ << "(d=" << dim_;
  if (family_) out << ",kappa=" << family_->kappa;
  if (const auto* c = std::get_if<Composite>(&kind_)) {
    out << ",base=" << c->base->describe() << ",g=" << c->transform.name();
  }
  out << ")";
  return out.str();
}

ObjectiveSpec hessian_family(HessianFamily family, std::size_t d, int kappa) {
  if (d < 1) throw InvalidInput("dimension must be >= 1");
  if (kappa < 0) throw InvalidInput("kappa must be >= 0");
  Vector h(d, 1.0);
  if (d > 1) {
    const double big = std::pow(10.0, kappa);
    switch (family) {
      case HessianFamily::H1:
        std::fill(h.begin() + 1, h.end(), big);
        break;
      case HessianFamily::H2:
        for (std::size_t i = 0; i < d; ++i) {
          h[i] = std::pow(10.0, kappa * static_cast<double>(i) / static_cast<double>(d - 1));
        }
        break;
      case HessianFamily::H3:
        h.back() = big;
        break;
    }
  }
  auto spec = ObjectiveSpec::diagonal(std::move(h), std::string(family_name(family)));
  spec.family_ = ObjectiveSpec::FamilyTag{family, kappa};
  return spec;
}

ObjectiveSpec perturbed_family(HessianFamily family, std::size_t d, int kappa, double amplitude,
                               double frequency) {
  const auto base = hessian_family(family, d, kappa);
  auto spec = ObjectiveSpec::perturbed(*base.hessian_diagonal(), amplitude, frequency, "perturbed");
  spec.family_ = ObjectiveSpec::FamilyTag{family, kappa};
  return spec;
}

ObjectiveSpec make_composite(const ObjectiveSpec& base, Transform g, Vector x_opt) {
  if (base.is_composite()) throw InvalidInput("cannot nest composite objectives");
  if (x_opt.size() != base.dim()) {
    throw InvalidInput("x_opt has dimension " + std::to_string(x_opt.size()) + ", expected " +
                       std::to_string(base.dim()));
  }
  ObjectiveSpec spec(Composite{std::make_shared<const ObjectiveSpec>(base), g, std::move(x_opt)},
                     base.dim(), base.strong_convexity(), base.smoothness(), base.label());
  spec.family_ = base.family_;
  return spec;
}

// ---------------------------------------------------------------------------
// JSON

nlohmann::json to_json(const ObjectiveSpec& spec) {
  using nlohmann::json;
  return std::visit(
      Overloaded{
          [&](const QuadraticDiag& q) -> json {
            if (const auto& tag = spec.family()) {
              return {{"kind", family_name(tag->family)}, {"dim", spec.dim()}, {"kappa", tag->kappa}};
            }
            return {{"kind", "diag"}, {"h", q.h}};
          },
          [&](const QuadraticPerturbed& q) -> json {
            json j{{"kind", "perturbed"},
                   {"perturb", {{"M", q.amplitude}, {"omega", q.frequency}}}};
            if (const auto& tag = spec.family()) {
              j["dim"] = spec.dim();
              j["kappa"] = tag->kappa;
              j["family"] = family_name(tag->family);
            } else {
              j["base"] = q.base;
            }
            return j;
          },
          [&](const Composite& c) -> json {
            return {{"kind", "composite"},
                    {"base", to_json(*c.base)},
                    {"transform", c.transform.name()},
                    {"x_opt", c.x_opt}};
          },
      },
      spec.kind());
}

ObjectiveSpec objective_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("kind")) throw InvalidInput("objective needs a 'kind' field");
  const auto kind = j.at("kind").get<std::string>();

  if (kind == "composite") {
    if (!j.contains("base")) throw InvalidInput("composite objective needs a 'base' object");
    const auto base = objective_from_json(j.at("base"));
    const auto g = Transform::parse(j.value("transform", std::string("identity")));
    Vector x_opt = j.contains("x_opt") ? j.at("x_opt").get<Vector>() : Vector(base.dim(), 0.0);
    return make_composite(base, g, std::move(x_opt));
  }

  auto base = [&]() -> ObjectiveSpec {
    if (kind == "diag") return ObjectiveSpec::diagonal(j.at("h").get<Vector>());
    if (kind == "perturbed") {
      const auto& p = j.at("perturb");
      const double M = p.at("M").get<double>();
      const double omega = p.at("omega").get<double>();
      if (j.contains("base")) return ObjectiveSpec::perturbed(j.at("base").get<Vector>(), M, omega);
      return perturbed_family(parse_family(j.value("family", std::string("h1"))),
                              j.at("dim").get<std::size_t>(), j.value("kappa", 0), M, omega);
    }
    return hessian_family(parse_family(kind), j.at("dim").get<std::size_t>(), j.value("kappa", 0));
  }();

  // Flat form: a transform and/or shift on a plain kind makes a composite.
  if (j.contains("transform") || j.contains("x_opt")) {
    const auto g = Transform::parse(j.value("transform", std::string("identity")));
    Vector x_opt = j.contains("x_opt") ? j.at("x_opt").get<Vector>() : Vector(base.dim(), 0.0);
    return make_composite(base, g, std::move(x_opt));
  }
  return base;
}

double norm(std::span<const double> x) { return std::sqrt(dot(x, x)); }

double dot(std::span<const double> a, std::span<const double> b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
  return sum;
}

}  // namespace esrate
