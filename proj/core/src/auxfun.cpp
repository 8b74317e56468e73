#include "gradflow/auxfun.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include "gradflow/errors.hpp"
#include "gradflow/model.hpp"

namespace gradflow {

namespace {

ConvexAux quadratic() {
  ConvexAux a;
  a.name = "quadratic";
  a.c = [](double r) { return r * r; };
  a.cprime = [](double r) { return 2.0 * r; };
  a.csecond = [](double) { return 2.0; };
  a.cinv = [](double y) { return std::sqrt(y); };
  a.L = 2.0;
  a.domain_lo = 0.0;
  a.range_lo = 0.0;
  a.range_closed = true;
  return a;
}

ConvexAux softplus() {
  ConvexAux a;
  a.name = "softplus";
  a.c = [](double r) { return r > 0.0 ? r + std::log1p(std::exp(-r)) : std::log1p(std::exp(r)); };
  a.cprime = [](double r) { return 1.0 / (1.0 + std::exp(-r)); };
  a.csecond = [](double r) {
    const double s = 1.0 / (1.0 + std::exp(-r));
    return s * (1.0 - s);
  };
  // ln(e^y - 1), written to stay finite for large y.
  a.cinv = [](double y) { return y > 1.0 ? y + std::log1p(-std::exp(-y)) : std::log(std::expm1(y)); };
  a.L = 0.25;
  a.range_lo = 0.0;
  a.range_closed = false;
  return a;
}

ConvexAux logsquare() {
  ConvexAux a;
  a.name = "logsquare";
  a.c = [](double r) {
    const double l = std::log(r);
    return l * l;
  };
  a.cprime = [](double r) { return 2.0 * std::log(r) / r; };
  a.csecond = [](double r) { return 2.0 * (1.0 - std::log(r)) / (r * r); };
  a.cinv = [](double y) { return std::exp(std::sqrt(y)); };
  a.L = 2.0;
  a.domain_lo = 1.0;
  a.range_lo = 0.0;
  a.range_closed = true;
  return a;
}

ConvexAux exponential() {
  ConvexAux a;
  a.name = "exponential";
  a.c = [](double r) { return std::exp(r); };
  a.cprime = [](double r) { return std::exp(r); };
  a.csecond = [](double r) { return std::exp(r); };
  a.cinv = [](double y) { return std::log(y); };
  a.L = 2.0;
  a.range_lo = 0.0;
  a.range_closed = false;
  return a;
}

int parse_int_suffix(std::string_view text, std::string_view prefix, std::string_view full) {
  text.remove_prefix(prefix.size());
  int value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw ConfigError("malformed auxiliary function '" + std::string(full) + "'");
  }
  return value;
}

[[noreturn]] void node_error(const Field& phi, std::size_t k, const std::string& what) {
  const int nx = phi.grid().nx();
  std::ostringstream msg;
  msg << what << " at node (" << static_cast<int>(k % nx) << ", " << static_cast<int>(k / nx)
      << "), phi = " << phi[k];
  throw DomainError(msg.str());
}

}  // namespace

ConvexAux ConvexAux::with_L(double new_L) const {
  if (!(new_L > 0.0)) throw ConfigError("smoothness constant L must be positive");
  ConvexAux copy = *this;
  copy.L = new_L;
  return copy;
}

bool ConvexAux::in_range(double y) const noexcept {
  if (!std::isfinite(y)) return false;
  return range_closed ? y >= range_lo : y > range_lo;
}

ConvexAux builtin_convex(std::string_view name) {
  if (name == "quadratic") return quadratic();
  if (name == "softplus") return softplus();
  if (name == "logsquare") return logsquare();
  if (name == "exponential") return exponential();
  throw ConfigError("unknown convex auxiliary function '" + std::string(name) + "'");
}

MonoAux MonoAux::from_k(int k) {
  if (k < 0) throw ConfigError("monomial index k must be nonnegative");
  return MonoAux(2 * k + 1);
}

MonoAux MonoAux::power(int p) {
  if (p < 0 || (p != 0 && p % 2 == 0)) {
    throw ConfigError("power exponent must be 0 or odd so that g' >= 0, got " + std::to_string(p));
  }
  return MonoAux(p);
}

double MonoAux::g(double r) const noexcept { return exponent_ == 0 ? 1.0 : std::pow(r, exponent_); }

double MonoAux::gprime(double r) const noexcept {
  if (exponent_ == 0) return 0.0;
  if (exponent_ == 1) return 1.0;
  return exponent_ * std::pow(r, exponent_ - 1);
}

std::string MonoAux::name() const { return "power:p=" + std::to_string(exponent_); }

AuxSpec parse_aux(std::string_view name) {
  constexpr std::string_view kMono = "monomial:k=";
  constexpr std::string_view kPower = "power:p=";
  if (name.starts_with(kMono)) return MonoAux::from_k(parse_int_suffix(name, kMono, name));
  if (name.starts_with(kPower)) return MonoAux::power(parse_int_suffix(name, kPower, name));
  return builtin_convex(name);
}

std::string aux_name(const AuxSpec& aux) {
  if (const auto* c = std::get_if<ConvexAux>(&aux)) return c->name;
  return std::get<MonoAux>(aux).name();
}

double r_of_value(double phi, const ConvexAux& aux, double a1) {
  const double y = potential(phi) + a1;
  if (!aux.in_range(y)) {
    throw DomainError(aux.name + ": F(phi) + a1 = " + std::to_string(y) + " is outside the range of c");
  }
  const double r = aux.cinv(y);
  if (!std::isfinite(r) || r < aux.domain_lo) {
    throw DomainError(aux.name + ": inverse left the increasing branch for y = " + std::to_string(y));
  }
  return r;
}

double p_of_value(double phi, const ConvexAux& aux, double a1) {
  const double slope = aux.cprime(r_of_value(phi, aux, a1));
  if (slope == 0.0 || !std::isfinite(slope)) {
    throw DomainError(aux.name + ": c'(r(phi)) vanishes, P is singular");
  }
  return dpotential(phi) / slope;
}

double r_of_value_mono(double phi, const MonoAux& mono, double a1) {
  const double y = potential(phi) + a1;
  if (!(y > 0.0)) throw DomainError(mono.name() + ": F(phi) + a1 must be positive");
  return std::pow(y, 1.0 / (mono.exponent() + 1));
}

double p_of_value_mono(double phi, const MonoAux& mono, double a1) {
  const double y = potential(phi) + a1;
  if (!(y > 0.0)) throw DomainError(mono.name() + ": F(phi) + a1 must be positive");
  const int p = mono.exponent();
  return dpotential(phi) / ((p + 1) * std::pow(y, static_cast<double>(p) / (p + 1)));
}

Field r_of_phi(const Field& phi, const ConvexAux& aux, double a1) {
  Field out(phi.grid());
  for (std::size_t k = 0; k < phi.size(); ++k) {
    try {
      out[k] = r_of_value(phi[k], aux, a1);
    } catch (const DomainError& e) {
      node_error(phi, k, e.what());
    }
  }
  return out;
}

Field p_of_phi(const Field& phi, const ConvexAux& aux, double a1) {
  Field out(phi.grid());
  for (std::size_t k = 0; k < phi.size(); ++k) {
    try {
      out[k] = p_of_value(phi[k], aux, a1);
    } catch (const DomainError& e) {
      node_error(phi, k, e.what());
    }
  }
  return out;
}

Field r_of_phi_mono(const Field& phi, const MonoAux& mono, double a1) {
  Field out(phi.grid());
  for (std::size_t k = 0; k < phi.size(); ++k) {
    try {
      out[k] = r_of_value_mono(phi[k], mono, a1);
    } catch (const DomainError& e) {
      node_error(phi, k, e.what());
    }
  }
  return out;
}

Field p_of_phi_mono(const Field& phi, const MonoAux& mono, double a1) {
  Field out(phi.grid());
  for (std::size_t k = 0; k < phi.size(); ++k) {
    try {
      out[k] = p_of_value_mono(phi[k], mono, a1);
    } catch (const DomainError& e) {
      node_error(phi, k, e.what());
    }
  }
  return out;
}

}  // namespace gradflow
