#pragma once

#include <robinsim/errors.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace robinsim {

template <std::size_t D>
using Vec = std::array<double, D>;

/// Row-major dense D x D matrix, m[row][col].
template <std::size_t D>
using Mat = std::array<Vec<D>, D>;

// ---------------------------------------------------------------------------
// Scalar fields f(x, t)
// ---------------------------------------------------------------------------

/// A parametric scalar field f(x, t) on the half line.
///
/// The built-in families (constant, linear-in-x) are evaluated inline; any
/// other evaluable function can be wrapped as a custom field, optionally with
/// its exact x-derivative.
class ScalarField {
 public:
  using Function = std::function<double(double x, double t)>;
  enum class Kind { constant, linear, custom };

  static ScalarField constant(double value) {
    ScalarField f(Kind::constant, "constant", {value});
    f.intercept_ = value;
    return f;
  }

  /// f(x, t) = intercept + slope * x
  static ScalarField linear(double slope, double intercept = 0.0) {
    ScalarField f(Kind::linear, "linear", {slope, intercept});
    f.slope_ = slope;
    f.intercept_ = intercept;
    return f;
  }

  static ScalarField custom(std::string family, Function fn, Function dfdx = {},
                            std::vector<double> params = {}) {
    if (!fn) throw ConfigError("custom field '" + family + "' has no evaluator");
    ScalarField f(Kind::custom, std::move(family), std::move(params));
    f.fn_ = std::move(fn);
    f.dfdx_ = std::move(dfdx);
    return f;
  }

  double operator()(double x, double t) const {
    switch (kind_) {
      case Kind::constant:
        return intercept_;
      case Kind::linear:
        return intercept_ + slope_ * x;
      case Kind::custom:
        break;
    }
    return fn_(x, t);
  }

  /// df/dx at (x, t). Exact for the built-in families and for custom fields
  /// registered with a derivative; otherwise a central difference with
  /// step 1e-6.
  double derivative_x(double x, double t) const {
    switch (kind_) {
      case Kind::constant:
        return 0.0;
      case Kind::linear:
        return slope_;
      case Kind::custom:
        break;
    }
    if (dfdx_) return dfdx_(x, t);
    constexpr double h = 1e-6;
    return (fn_(x + h, t) - fn_(x - h, t)) / (2.0 * h);
  }

  Kind kind() const { return kind_; }
  bool is_constant() const { return kind_ == Kind::constant; }
  bool has_exact_derivative() const { return kind_ != Kind::custom || static_cast<bool>(dfdx_); }
  const std::string& family() const { return family_; }
  std::span<const double> params() const { return params_; }

  /// Only meaningful for the linear family.
  double slope() const { return slope_; }
  double intercept() const { return intercept_; }

 private:
  ScalarField(Kind kind, std::string family, std::vector<double> params)
      : kind_(kind), family_(std::move(family)), params_(std::move(params)) {}

  Kind kind_;
  std::string family_;
  std::vector<double> params_;
  double slope_ = 0.0;
  double intercept_ = 0.0;
  Function fn_;
  Function dfdx_;
};

/// Maps family tags (as written in experiment configs) to field factories.
class FieldRegistry {
 public:
  using Factory = std::function<ScalarField(std::span<const double> params)>;

  FieldRegistry() {
    add("zero", [](std::span<const double> p) {
      expect_arity("zero", p, 0, 0);
      return ScalarField::constant(0.0);
    });
    add("constant", [](std::span<const double> p) {
      expect_arity("constant", p, 1, 1);
      return ScalarField::constant(p[0]);
    });
    // linear:slope[,intercept]
    add("linear", [](std::span<const double> p) {
      expect_arity("linear", p, 1, 2);
      return ScalarField::linear(p[0], p.size() > 1 ? p[1] : 0.0);
    });
  }

  /// Process-wide registry used by the config parser.
  static FieldRegistry& global() {
    static FieldRegistry registry;
    return registry;
  }

  void add(std::string family, Factory factory) { factories_[std::move(family)] = std::move(factory); }

  bool contains(std::string_view family) const { return factories_.find(family) != factories_.end(); }

  ScalarField make(std::string_view family, std::span<const double> params) const {
    auto it = factories_.find(family);
    if (it == factories_.end()) throw ConfigError("unknown field family '" + std::string(family) + "'");
    return it->second(params);
  }

  static void expect_arity(std::string_view family, std::span<const double> p, std::size_t lo,
                           std::size_t hi) {
    if (p.size() < lo || p.size() > hi) {
      throw ConfigError("field family '" + std::string(family) + "' takes " + std::to_string(lo) +
                        (lo == hi ? "" : "-" + std::to_string(hi)) + " parameter(s), got " +
                        std::to_string(p.size()));
    }
  }

 private:
  std::map<std::string, Factory, std::less<>> factories_;
};

// ---------------------------------------------------------------------------
// 1D coefficient model
// ---------------------------------------------------------------------------

/// Drift a(x,t) and diffusion coefficient sigma(x,t) of the 1D dynamics
/// dx = a dt + sqrt(2 sigma) dw on x > 0.
///
/// sigma must stay above sigma_min. The built-in families are checked on the
/// whole half line at construction; custom fields are checked on evaluation.
class CoefficientModel1D {
 public:
  static constexpr double default_sigma_min = 1e-8;

  CoefficientModel1D(ScalarField drift, ScalarField sigma, double sigma_min = default_sigma_min)
      : drift_(std::move(drift)), sigma_(std::move(sigma)), sigma_min_(sigma_min) {
    if (!(sigma_min_ > 0.0)) throw ConfigError("sigma_min must be positive");
    switch (sigma_.kind()) {
      case ScalarField::Kind::constant:
        if (!(sigma_(0.0, 0.0) >= sigma_min_)) {
          throw ConfigError("diffusion coefficient " + std::to_string(sigma_(0.0, 0.0)) +
                            " is below sigma_min");
        }
        break;
      case ScalarField::Kind::linear:
        if (!(sigma_.intercept() >= sigma_min_) || sigma_.slope() < 0.0) {
          throw ConfigError("linear diffusion coefficient must have intercept >= sigma_min and "
                            "non-negative slope on x >= 0");
        }
        break;
      case ScalarField::Kind::custom:
        break;
    }
  }

  /// Constant drift a and constant diffusion sigma.
  static CoefficientModel1D constant(double a, double sigma) {
    return {ScalarField::constant(a), ScalarField::constant(sigma)};
  }

  double drift(double x, double t) const { return drift_(x, t); }

  double diffusion(double x, double t) const {
    const double s = sigma_(x, t);
    if (!(s >= sigma_min_)) {
      throw DomainError("diffusion coefficient " + std::to_string(s) + " at x=" + std::to_string(x) +
                        " is below sigma_min");
    }
    return s;
  }

  /// d sigma / dx, used for boundary-layer corrections.
  double diffusion_slope(double x, double t) const { return sigma_.derivative_x(x, t); }

  const ScalarField& drift_field() const { return drift_; }
  const ScalarField& sigma_field() const { return sigma_; }
  double sigma_min() const { return sigma_min_; }
  bool constant_coefficients() const { return drift_.is_constant() && sigma_.is_constant(); }

 private:
  ScalarField drift_;
  ScalarField sigma_;
  double sigma_min_;
};

inline double eval_drift(const CoefficientModel1D& model, double x, double t) { return model.drift(x, t); }

// ---------------------------------------------------------------------------
// Dense helpers for the half-space model
// ---------------------------------------------------------------------------

template <std::size_t D>
Mat<D> identity_matrix() {
  Mat<D> m{};
  for (std::size_t i = 0; i < D; ++i) m[i][i] = 1.0;
  return m;
}

/// B * B^T
template <std::size_t D>
Mat<D> gram(const Mat<D>& b) {
  Mat<D> out{};
  for (std::size_t i = 0; i < D; ++i)
    for (std::size_t j = 0; j < D; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < D; ++k) s += b[i][k] * b[j][k];
      out[i][j] = s;
    }
  return out;
}

template <std::size_t D>
double max_abs(const Mat<D>& m) {
  double r = 0.0;
  for (const auto& row : m)
    for (double v : row) r = std::max(r, std::abs(v));
  return r;
}

/// max |B B^T - sigma| / max |sigma|
template <std::size_t D>
double factor_residual(const Mat<D>& b, const Mat<D>& sigma) {
  const Mat<D> g = gram(b);
  double r = 0.0;
  for (std::size_t i = 0; i < D; ++i)
    for (std::size_t j = 0; j < D; ++j) r = std::max(r, std::abs(g[i][j] - sigma[i][j]));
  return r / max_abs(sigma);
}

/// Lower-triangular Cholesky factor B of a symmetric positive definite
/// matrix, so that B * B^T = sigma.
///
/// Throws DomainError for an asymmetric input or a non-positive pivot; the
/// message names the pivot index (0-based) and its value.
template <std::size_t D>
Mat<D> factor_diffusion(const Mat<D>& sigma) {
  const double scale = max_abs(sigma);
  for (std::size_t i = 0; i < D; ++i)
    for (std::size_t j = 0; j < i; ++j)
      if (std::abs(sigma[i][j] - sigma[j][i]) > 1e-12 * scale) {
        throw DomainError("diffusion tensor is not symmetric at (" + std::to_string(i) + "," +
                          std::to_string(j) + ")");
      }

  Mat<D> b{};
  for (std::size_t j = 0; j < D; ++j) {
    double pivot = sigma[j][j];
    for (std::size_t k = 0; k < j; ++k) pivot -= b[j][k] * b[j][k];
    if (!(pivot > 0.0)) {
      throw DomainError("diffusion tensor is not positive definite: pivot " + std::to_string(j) +
                        " = " + std::to_string(pivot));
    }
    b[j][j] = std::sqrt(pivot);
    for (std::size_t i = j + 1; i < D; ++i) {
      double s = sigma[i][j];
      for (std::size_t k = 0; k < j; ++k) s -= b[i][k] * b[j][k];
      b[i][j] = s / b[j][j];
    }
  }
  return b;
}

// ---------------------------------------------------------------------------
// Half-space model
// ---------------------------------------------------------------------------

/// Dynamics dx = a(x,t) dt + sqrt(2) B dw in the half space x_1 > 0 with a
/// constant SPD diffusion tensor sigma = B B^T. The boundary normal is
/// n = (1, 0, ..., 0), so sigma_n = sigma_11.
template <std::size_t D>
class HalfSpaceModel {
  static_assert(D >= 2, "use CoefficientModel1D for one dimension");

 public:
  using Point = Vec<D>;
  using DriftField = std::function<Point(const Point& x, double t)>;

  /// Constant drift; the factor defaults to the Cholesky factor of sigma.
  explicit HalfSpaceModel(const Mat<D>& sigma, const Point& drift = {})
      : sigma_(sigma), factor_(factor_diffusion(sigma)), constant_drift_(drift) {}

  HalfSpaceModel(const Mat<D>& sigma, DriftField drift)
      : sigma_(sigma), factor_(factor_diffusion(sigma)), drift_field_(std::move(drift)) {
    if (!drift_field_) throw ConfigError("drift field has no evaluator");
  }

  /// Replace the default factor with another B satisfying B B^T = sigma.
  HalfSpaceModel& with_factor(const Mat<D>& b) {
    const double r = factor_residual(b, sigma_);
    if (r > 1e-12) {
      throw ConfigError("factor B does not reproduce sigma: relative residual " + std::to_string(r));
    }
    factor_ = b;
    return *this;
  }

  Point drift(const Point& x, double t) const {
    if (drift_field_) return drift_field_(x, t);
    return constant_drift_;
  }

  bool has_constant_drift() const { return !drift_field_; }
  const Point& constant_drift() const { return constant_drift_; }
  const Mat<D>& sigma() const { return sigma_; }
  const Mat<D>& factor() const { return factor_; }
  double sigma_n() const { return sigma_[0][0]; }

 private:
  Mat<D> sigma_;
  Mat<D> factor_;
  Point constant_drift_{};
  DriftField drift_field_;
};

template <std::size_t D>
Vec<D> eval_drift(const HalfSpaceModel<D>& model, const Vec<D>& x, double t) {
  return model.drift(x, t);
}

}  // namespace robinsim
