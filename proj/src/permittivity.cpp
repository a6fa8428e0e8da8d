#include "kcpc/permittivity.hpp"

#include "kcpc/error.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>

namespace kcpc {

std::string to_string(PermittivityMode mode) {
  switch (mode) {
    case PermittivityMode::Diagonal:
      return "diagonal";
    case PermittivityMode::Trivial:
      return "trivial";
    case PermittivityMode::CrossDoF:
      return "crossdof";
  }
  return "?";
}

PermittivityMode parse_permittivity_mode(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "diagonal") return PermittivityMode::Diagonal;
  if (lower == "trivial") return PermittivityMode::Trivial;
  if (lower == "crossdof") return PermittivityMode::CrossDoF;
  throw ConfigError("unknown permittivity mode '" + std::string(name) +
                    "' (expected diagonal, trivial or crossdof)");
}

PermittivityTensor::PermittivityTensor(const Eigen::Matrix3cd& eps) {
  if (!eps.allFinite()) throw ConfigError("permittivity tensor has non-finite entries");
  const double scale = std::max(1.0, eps.cwiseAbs().maxCoeff());
  const double skew = (eps - eps.adjoint()).cwiseAbs().maxCoeff();
  if (skew > 1e-14 * scale) {
    throw ConfigError("permittivity tensor is not Hermitian (max |eps - eps^H| = " +
                      std::to_string(skew) + ")");
  }
  // Remove the admissible rounding so downstream blocks are exactly Hermitian.
  eps_ = 0.5 * (eps + eps.adjoint());
}

Eigen::Vector3d PermittivityTensor::eigenvalues() const {
  return Eigen::SelfAdjointEigenSolver<Eigen::Matrix3cd>(eps_, Eigen::EigenvaluesOnly).eigenvalues();
}

bool PermittivityTensor::is_diagonal() const {
  return eps_(0, 1) == cd{} && eps_(0, 2) == cd{} && eps_(1, 2) == cd{};
}

PermittivityTensor pseudochiral_tensor(double eps_lattice, double beta) {
  if (!std::isfinite(eps_lattice) || eps_lattice <= 0.0) {
    throw ConfigError("eps_lattice must be positive");
  }
  if (!std::isfinite(beta)) throw ConfigError("beta must be finite");
  if (eps_lattice < 1.0) {
    emit_warning("eps_lattice < 1 gives a tensor with eigenvalues above 1; the permittivity "
                 "operator may not be positive definite");
  }
  const double diag = std::sqrt(1.0 + beta * beta);
  const double b = std::abs(beta);
  Eigen::Matrix3cd eps;
  eps << cd(diag, 0), cd(0, -b), cd(0, 0),  //
      cd(0, b), cd(diag, 0), cd(0, 0),      //
      cd(0, 0), cd(0, 0), cd(1, 0);
  return PermittivityTensor(eps / eps_lattice);
}

HpdReport hpd_report(const PermittivityTensor& tensor) {
  const Eigen::Matrix3cd& eps = tensor.matrix();
  HpdReport report;

  const Eigen::Vector3d lambda = tensor.eigenvalues();
  report.assumption_eigen = lambda(0) > 0.0 && lambda(2) <= 1.0 + 1e-12;

  report.assumption_sdd = true;
  for (int i = 0; i < 3; ++i) {
    double off = 0.0;
    for (int j = 0; j < 3; ++j) {
      if (j != i) off += std::abs(eps(i, j));
    }
    if (!(eps(i, i).real() > off)) report.assumption_sdd = false;
  }

  report.assumption_zero_offdiag = eps(0, 1) == cd{} || eps(0, 2) == cd{} || eps(1, 2) == cd{};
  report.guaranteed_trivial = report.assumption_eigen;
  report.guaranteed_crossdof =
      report.assumption_eigen && (report.assumption_sdd || report.assumption_zero_offdiag);

  Eigen::Matrix3cd clipped = eps;
  for (int i = 0; i < 3; ++i) clipped(i, i) = std::min(eps(i, i).real(), 1.0);
  report.lambda_min_bound =
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix3cd>(clipped, Eigen::EigenvaluesOnly).eigenvalues()(0);
  return report;
}

namespace {

std::array<int, 2> axes_of(AxisPair pair) {
  switch (pair) {
    case AxisPair::P12:
      return {0, 1};
    case AxisPair::P13:
      return {0, 2};
    case AxisPair::P23:
      return {1, 2};
  }
  return {0, 1};
}

// Visits every grid point p together with the four neighbours q at offsets
// {0, sa} along axis a and {0, sb} along axis b, wrapping periodically.
template <typename Fn>
void for_each_stencil(int n, int a, int sa, int b, int sb, Fn&& fn) {
  const std::array<std::size_t, 3> stride = {1, static_cast<std::size_t>(n),
                                             static_cast<std::size_t>(n) * n};
  std::array<int, 3> c{};
  for (c[2] = 0; c[2] < n; ++c[2]) {
    for (c[1] = 0; c[1] < n; ++c[1]) {
      for (c[0] = 0; c[0] < n; ++c[0]) {
        const std::size_t p = c[0] * stride[0] + c[1] * stride[1] + c[2] * stride[2];
        const int ca = (c[a] + sa + n) % n;
        const int cb = (c[b] + sb + n) % n;
        const std::size_t q_a = p + (static_cast<std::ptrdiff_t>(ca) - c[a]) * static_cast<std::ptrdiff_t>(stride[a]);
        const std::size_t q_b = p + (static_cast<std::ptrdiff_t>(cb) - c[b]) * static_cast<std::ptrdiff_t>(stride[b]);
        const std::size_t q_ab = q_a + (q_b - p);
        fn(p, p, q_a, q_b, q_ab);
      }
    }
  }
}

// Shifts of T (D0 backward along the first axis, D0^T forward along the second) or T^T.
std::array<int, 2> shifts(bool transpose) { return transpose ? std::array{1, -1} : std::array{-1, 1}; }

}  // namespace

std::vector<cd> transfer_T(AxisPair pair, int n, std::span<const cd> v, bool transpose) {
  const std::size_t cells = static_cast<std::size_t>(n) * n * n;
  if (v.size() != cells) throw ContractViolation("transfer_T input must hold N^3 values");
  const auto [a, b] = axes_of(pair);
  const auto [sa, sb] = shifts(transpose);
  std::vector<cd> out(cells);
  for_each_stencil(n, a, sa, b, sb, [&](std::size_t p, std::size_t q0, std::size_t q1, std::size_t q2,
                                        std::size_t q3) { out[p] = 0.25 * (v[q0] + v[q1] + v[q2] + v[q3]); });
  return out;
}

PermittivityOperator::PermittivityOperator(PermittivityTensor tensor, IndicatorField indicators,
                                           PermittivityMode mode)
    : tensor_(std::move(tensor)), indicators_(std::move(indicators)), mode_(mode) {
  if (mode_ == PermittivityMode::Diagonal && !tensor_.is_diagonal()) {
    throw ConfigError("permittivity mode 'diagonal' requires a diagonal eps1");
  }
  const std::size_t cells = static_cast<std::size_t>(indicators_.n) * indicators_.n * indicators_.n;
  for (const auto& e : indicators_.edge) {
    if (e.size() != cells) throw ContractViolation("indicator field has the wrong size");
  }
  if (indicators_.volume.size() != cells) throw ContractViolation("indicator field has the wrong size");
}

PermittivityOperator PermittivityOperator::vacuum(int n) {
  return PermittivityOperator(PermittivityTensor(), IndicatorField::constant(n, false),
                              PermittivityMode::Diagonal);
}

void PermittivityOperator::apply(std::span<const cd> in, std::span<cd> out) const {
  const int n = indicators_.n;
  const std::size_t cells = static_cast<std::size_t>(n) * n * n;
  if (in.size() != 3 * cells || out.size() != 3 * cells) {
    throw ContractViolation("permittivity apply needs 3 N^3 values");
  }
  const Eigen::Matrix3cd& eps = tensor_.matrix();

  for (int c = 0; c < 3; ++c) {
    const double d = eps(c, c).real() - 1.0;
    const std::uint8_t* mask = indicators_.edge[c].data();
    const cd* src = in.data() + c * cells;
    cd* dst = out.data() + c * cells;
    for (std::size_t p = 0; p < cells; ++p) dst[p] = mask[p] ? (d + 1.0) * src[p] : src[p];
  }
  if (mode_ == PermittivityMode::Diagonal) return;

  for (AxisPair pair : {AxisPair::P12, AxisPair::P13, AxisPair::P23}) {
    const auto [i, j] = axes_of(pair);
    const cd e = eps(i, j);
    if (e == cd{}) continue;
    const cd ec = std::conj(e);
    const cd* vi = in.data() + i * cells;
    const cd* vj = in.data() + j * cells;
    cd* oi = out.data() + i * cells;
    cd* oj = out.data() + j * cells;

    if (mode_ == PermittivityMode::Trivial) {
      const std::uint8_t* vol = indicators_.volume.data();
      for (std::size_t p = 0; p < cells; ++p) {
        if (!vol[p]) continue;
        oi[p] += e * vj[p];
        oj[p] += ec * vi[p];
      }
      continue;
    }

    // S v = (I_out T v + T (I_in v)) / 2 with T a four-point average.
    const std::uint8_t* mi = indicators_.edge[i].data();
    const std::uint8_t* mj = indicators_.edge[j].data();
    auto accumulate = [&](const cd* src, const std::uint8_t* m_in, const std::uint8_t* m_out, cd* dst,
                          cd coeff, bool transpose) {
      const auto [sa, sb] = shifts(transpose);
      for_each_stencil(n, i, sa, j, sb,
                       [&](std::size_t p, std::size_t q0, std::size_t q1, std::size_t q2, std::size_t q3) {
                         cd masked = 0.0;
                         if (m_in[q0]) masked += src[q0];
                         if (m_in[q1]) masked += src[q1];
                         if (m_in[q2]) masked += src[q2];
                         if (m_in[q3]) masked += src[q3];
                         cd total = masked;
                         if (m_out[p]) total += src[q0] + src[q1] + src[q2] + src[q3];
                         dst[p] += (0.125 * coeff) * total;
                       });
    };
    accumulate(vj, mj, mi, oi, e, false);
    accumulate(vi, mi, mj, oj, ec, true);
  }
}

FieldVector apply_M(const PermittivityOperator& op, const FieldVector& v) {
  if (v.space() != Space::Physical) throw ContractViolation("apply_M expects a physical field");
  if (v.n() != op.n()) throw ContractViolation("field grid does not match the permittivity operator");
  FieldVector out(v.n(), Space::Physical);
  op.apply(v.values(), out.values());
  return out;
}

}  // namespace kcpc
