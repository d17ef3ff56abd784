#pragma once

// Uniform entry point over the thirteen reconstruction methods.

#include <optional>
#include <string>
#include <vector>

#include "avltraj/core.hpp"
#include "avltraj/model.hpp"
#include "avltraj/position.hpp"
#include "avltraj/velocity.hpp"
#include "avltraj/vspline.hpp"

namespace avltraj {

/// Tunable parameters of all methods. Neighbourhood sizes left unset resolve
/// to default_neighborhood(n) per trip.
struct MethodParams {
  std::optional<std::size_t> k;
  std::optional<std::size_t> k_x;
  std::optional<std::size_t> k_v;
  double alpha = 0.5;
  VSplineConfig vspline;
  double flat_epsilon = kDefaultFlatEpsilon;

  friend bool operator==(const MethodParams& a, const MethodParams& b) {
    return a.k == b.k && a.k_x == b.k_x && a.k_v == b.k_v && a.alpha == b.alpha &&
           a.vspline.gamma == b.vspline.gamma && a.vspline.eta == b.vspline.eta &&
           a.vspline.mu == b.vspline.mu && a.vspline.velocity_floor == b.vspline.velocity_floor &&
           a.vspline.solver == b.vspline.solver && a.flat_epsilon == b.flat_epsilon;
  }
};

inline TrajectoryModel fit(Method method, const ObservationSeries& series,
                           const MethodParams& params = {}) {
  const std::size_t n = series.size();
  const auto locreg = [&] { return LocregConfig{params.k.value_or(default_neighborhood(n))}; };
  const auto bilocreg = [&] {
    return BiLocregConfig{params.k_x.value_or(default_neighborhood(n)),
                          params.k_v.value_or(default_neighborhood(n))};
  };
  const double eps = params.flat_epsilon;
  switch (method) {
    case Method::lseg: return fit_lseg(series);
    case Method::pchip: return fit_pchip(series, eps);
    case Method::locreg: return fit_locreg(series, locreg());
    case Method::locreg_pchip: return fit_locreg_pchip(series, locreg(), eps);
    case Method::lvmi: return fit_lvmi(series);
    case Method::vchip: return fit_vchip(series);
    case Method::vchip_me: return fit_vchip_me(series, eps);
    case Method::pchip_vchip: return fit_pchip_vchip(series, BlendConfig{params.alpha}, eps);
    case Method::locreg_v: return fit_locreg_v(series, bilocreg());
    case Method::locreg_pchip_v: return fit_locreg_pchip_v(series, bilocreg(), eps);
    case Method::vspline: return fit_vspline(series, params.vspline);
    case Method::vspline_mp: return fit_vspline_mp(series, params.vspline, eps);
    case Method::vspline_me: return fit_vspline_me(series, params.vspline, eps);
  }
  throw Error(ErrorKind::unknown_method, "unhandled method");
}

/// Parses a comma-separated list of method names; throws naming the first
/// unknown token.
inline std::vector<Method> parse_method_list(std::string_view list) {
  std::vector<Method> out;
  std::size_t pos = 0;
  while (pos <= list.size()) {
    const std::size_t comma = list.find(',', pos);
    const std::string_view token =
        list.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
    if (!token.empty()) {
      const auto m = parse_method(token);
      if (!m) throw Error(ErrorKind::unknown_method, "unknown method '" + std::string(token) + "'");
      out.push_back(*m);
    }
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

}  // namespace avltraj
