#pragma once

#include <Eigen/Dense>

#include <charconv>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>

namespace isovar {

// Chart points and tangent vectors live in dimension 2 or 3. The fixed upper
// bound keeps them on the stack while the actual size stays a runtime value.
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 3, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 3, 3>;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class ErrorKind {
  domain,
  unsupported_dimension,
  missing_embedding,
  invalid_domain,
  invalid_mesh,
  invalid_field,
  invalid_scale,
  invalid_constant,
  containment,
  unsupported,
  certificate_invalid,
  numeric,
  step_rejected,
  topology,
  rejected_input,
  inconclusive,
  precondition,
  epsilon_too_large,
  parse,
  validation,
  insufficient_data,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::domain: return "domain-error";
    case ErrorKind::unsupported_dimension: return "unsupported-dimension";
    case ErrorKind::missing_embedding: return "missing-embedding";
    case ErrorKind::invalid_domain: return "invalid-domain";
    case ErrorKind::invalid_mesh: return "invalid-mesh";
    case ErrorKind::invalid_field: return "invalid-field";
    case ErrorKind::invalid_scale: return "invalid-scale";
    case ErrorKind::invalid_constant: return "invalid-constant";
    case ErrorKind::containment: return "containment";
    case ErrorKind::unsupported: return "unsupported";
    case ErrorKind::certificate_invalid: return "certificate-invalid";
    case ErrorKind::numeric: return "numeric";
    case ErrorKind::step_rejected: return "step-rejected";
    case ErrorKind::topology: return "topology";
    case ErrorKind::rejected_input: return "rejected-input";
    case ErrorKind::inconclusive: return "inconclusive";
    case ErrorKind::precondition: return "precondition";
    case ErrorKind::epsilon_too_large: return "epsilon-too-large";
    case ErrorKind::parse: return "parse";
    case ErrorKind::validation: return "validation";
    case ErrorKind::insufficient_data: return "insufficient-data";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Neumaier compensated summation.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

inline Vec make_vec(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

inline Vec make_vec(double a, double b, double c) {
  Vec v(3);
  v << a, b, c;
  return v;
}

// Shortest round-trip decimal representation.
inline std::string format_double(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
  double x = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  while (first < last && (*first == ' ' || *first == '\t')) ++first;
  while (last > first && (last[-1] == ' ' || last[-1] == '\t' || last[-1] == '\r')) --last;
  if (first < last && *first == '+') ++first;
  auto res = std::from_chars(first, last, x);
  if (res.ec != std::errc() || res.ptr != last) {
    // from_chars rejects "inf"/"nan" spellings produced elsewhere.
    std::string tok(first, last);
    if (tok == "inf") return kInf;
    if (tok == "-inf") return -kInf;
    throw Error(ErrorKind::parse, "bad number '" + tok + "'");
  }
  return x;
}

}  // namespace isovar
