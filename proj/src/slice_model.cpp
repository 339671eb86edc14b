#include "cpi/slice_model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "cpi/error.hpp"
#include "cpi/exact_sum.hpp"
#include "cpi/parallel.hpp"

namespace cpi::slice {

namespace {

constexpr double kPi = std::numbers::pi;

// Complex product a * b computed in column blocks across workers.
Eigen::MatrixXcd blocked_product(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  Eigen::MatrixXcd out(a.rows(), b.cols());
  const Eigen::Index block = 64;
  const auto blocks = static_cast<std::size_t>((b.cols() + block - 1) / block);
  parallel_for(blocks, [&](std::size_t i) {
    const Eigen::Index c0 = static_cast<Eigen::Index>(i) * block;
    const Eigen::Index w = std::min(block, b.cols() - c0);
    out.middleCols(c0, w).noalias() = a * b.middleCols(c0, w);
  });
  return out;
}

}  // namespace

Setup1Slice::Setup1Slice(const SourceModel& source, const GeometryConfig& geometry, const ObjectMask& object,
                         quad::Options opt)
    : source_(source), geometry_(geometry), object_(object), opt_(opt) {
  source_.validate();
  if (geometry_.kind != SetupKind::Setup1) throw ConfigError("expected a Setup 1 geometry", "geometry.setup");
  geometry_.validate();
  refocus_ = refocus_params(geometry_);
  const double k = source_.k();
  const double za = geometry_.z_a, zb = geometry_.z_b, m = geometry_.magnification();
  const double si = source_.sigma_i, sg = source_.sigma_g, is = source_.intensity;
  sigma_a_ = za / (k * si);
  sigma_b_ = zb / (k * si);
  gamma_b_ = k / (m * zb);
  const cplx inv_s2 = cplx(1.0 / (si * si), k * (1.0 / za - 1.0 / zb));
  const cplx s2 = 1.0 / inv_s2;
  gamma_a_ = k * k * s2 / (2.0 * zb * zb);
  c_aa_ = is * sg * si * k / za;
  c_bb_ = is * sg * si * k * k / (2.0 * kPi * m * zb * zb);
  c_ab_ = std::sqrt(is * is * sg * sg * k * k * k * std::abs(s2) / (2.0 * kPi * m * za * zb * zb));
}

double Setup1Slice::w_aa(double a1, double a2) const {
  const double d = a1 - a2;
  return c_aa_ * std::exp(-d * d / (2.0 * sigma_a_ * sigma_a_));
}

cplx Setup1Slice::w_ab(double a, double b) const {
  const double u = a / refocus_.alpha;
  const cplx ga = std::conj(gamma_a_);
  const auto sup = object_.slice_support();
  const auto bp = object_.slice_breakpoints();
  auto f = [&](double r) -> cplx {
    const double t = u - r;
    return object_(r) * std::exp(-ga * t * t + cplx(0.0, gamma_b_ * r * b));
  };
  return c_ab_ * quad::require(quad::integrate(f, sup.lo, sup.hi, opt_, bp), "W_AB object integral");
}

cplx Setup1Slice::w_bb(double b1, double b2) const {
  const auto sup = object_.slice_support();
  const auto bp = object_.slice_breakpoints();
  const double sb = sigma_b_;
  quad::Trace trace;
  auto outer = [&](double r1) -> cplx {
    const double a1 = object_(r1);
    if (a1 == 0.0) return 0.0;
    auto inner = [&](double r2) -> cplx {
      const double d = r1 - r2;
      return object_(r2) * std::exp(cplx(-d * d / (2.0 * sb * sb), gamma_b_ * r2 * b2));
    };
    const double lo = std::max(sup.lo, r1 - 9.0 * sb), hi = std::min(sup.hi, r1 + 9.0 * sb);
    const cplx in = trace.take(quad::integrate(inner, lo, hi, opt_, bp));
    return a1 * std::polar(1.0, -gamma_b_ * r1 * b1) * in;
  };
  const auto r = quad::integrate(outer, sup.lo, sup.hi, opt_, bp);
  if (!trace.converged) throw NumericalError("W_BB inner integral: quadrature did not converge");
  return c_bb_ * quad::require(r, "W_BB object integral");
}

WindowIntegrals window_integrals(const Setup1Slice& model, double rho_a, const WindowOptions& opt) {
  if (!(opt.window.hi > opt.window.lo)) throw ConfigError("empty D_b window", "window");
  if (!(opt.refine > 0.0)) throw ConfigError("must be positive", "refine");
  const RefocusParams rp = model.refocus();
  const double alpha = rp.alpha, beta = rp.beta, delta = rp.delta();
  const double gb = model.gamma_b(), sa = model.sigma_a(), sb = model.sigma_b();
  const cplx ga = model.gamma_a();
  const double gr = ga.real(), gabs = std::abs(ga);
  const ObjectMask& obj = model.object();
  const Interval sup = obj.slice_support();
  const double r_obj = std::max(std::abs(sup.lo), std::abs(sup.hi));
  const double b_max = std::max(std::abs(opt.window.lo), std::abs(opt.window.hi));

  // Reach of the gaussian factor exp(-gamma_a* (u - r)^2) in u - r.
  const double u_max = std::abs(rho_a) + std::abs(delta) * b_max;
  const double reach = std::min(u_max + r_obj, 6.5 / std::sqrt(gr));
  const double rate_r = gb * b_max + 2.0 * gabs * reach + std::sqrt(gr) + 1.0 / sb;
  const double rate_b = gb * r_obj + 2.0 * gabs * std::abs(delta) * reach + std::abs(beta) / sa + 1e-300;
  const double h_r = std::min(sb, 6.0 / rate_r) / opt.refine;
  const double h_b = 6.0 / rate_b / opt.refine;

  const auto bp = obj.slice_breakpoints();
  quad::Nodes rn = quad::composite_nodes(sup.lo, sup.hi, h_r, bp, opt.order);
  std::vector<double> r, wa;
  for (std::size_t k = 0; k < rn.size(); ++k) {
    const double v = obj(rn.x[k]);
    if (v == 0.0) continue;
    r.push_back(rn.x[k]);
    wa.push_back(rn.w[k] * v);
  }
  const quad::Nodes bn = quad::composite_nodes(opt.window.lo, opt.window.hi, h_b, {}, opt.order);
  const auto n = static_cast<Eigen::Index>(bn.size());
  const auto m = static_cast<Eigen::Index>(r.size());

  WindowIntegrals out;
  out.window_nodes = bn.size();
  out.object_nodes = r.size();
  if (m == 0) return out;

  Eigen::MatrixXcd g(n, m), e(m, n), ec(m, n);
  Eigen::MatrixXd kk(m, m);
  std::vector<double> x(bn.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    const double b = bn.x[static_cast<std::size_t>(i)];
    x[static_cast<std::size_t>(i)] = alpha * rho_a + beta * b;
    const double u = x[static_cast<std::size_t>(i)] / alpha;
    for (Eigen::Index k = 0; k < m; ++k) {
      const double t = u - r[static_cast<std::size_t>(k)];
      g(i, k) = wa[static_cast<std::size_t>(k)] * std::exp(-std::conj(ga) * t * t);
      e(k, i) = std::polar(1.0, gb * r[static_cast<std::size_t>(k)] * b);
      ec(k, i) = wa[static_cast<std::size_t>(k)] * std::conj(e(k, i));
    }
  }
  for (Eigen::Index k = 0; k < m; ++k)
    for (Eigen::Index l = 0; l < m; ++l) {
      const double d = r[static_cast<std::size_t>(k)] - r[static_cast<std::size_t>(l)];
      kk(k, l) = std::exp(-d * d / (2.0 * sb * sb));
    }

  // wab(i, j) = W_AB(x_i, b_j); wbb(i, j) = W_BB(b_i, b_j).
  const Eigen::MatrixXcd wab = model.c_ab() * blocked_product(g, e);
  const Eigen::MatrixXcd t = blocked_product(kk.cast<cplx>(), ec.conjugate());
  const Eigen::MatrixXcd wbb = model.c_bb() * blocked_product(ec.transpose(), t);

  const auto& w = bn.w;
  struct Row {
    double f0 = 0.0;
    cplx f1, f2, f3, f4, f6;
  };
  std::vector<Row> rows(bn.size());
  parallel_for(bn.size(), [&](std::size_t iu) {
    const auto i = static_cast<Eigen::Index>(iu);
    Row acc;
    for (Eigen::Index j = 0; j < n; ++j) {
      const std::size_t ju = static_cast<std::size_t>(j);
      const double ww = w[iu] * w[ju];
      const double waa = model.w_aa(x[iu], x[ju]);
      acc.f0 += ww * waa * waa * std::norm(wbb(i, j));
      acc.f1 += ww * std::norm(wab(i, j)) * std::norm(wab(j, i));
      acc.f2 += ww * wab(i, i) * wab(j, j) * std::conj(wab(j, i)) * std::conj(wab(i, j));
      acc.f3 += ww * waa * wbb(i, j) * wab(i, i) * std::conj(wab(j, j));
      acc.f4 += ww * waa * wab(j, i) * wbb(i, j) * std::conj(wab(i, j));
      acc.f6 += ww * waa * wbb(j, i) * std::conj(wab(i, i)) * wab(j, j);
    }
    rows[iu] = acc;
  });
  ExactSum s_sigma, s_f0, f1r, f1i, f2r, f2i, f3r, f3i, f4r, f4i, f6r, f6i;
  for (std::size_t i = 0; i < bn.size(); ++i) {
    s_sigma.add(w[i] * std::norm(wab(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i))));
    s_f0.add(rows[i].f0);
    f1r.add(rows[i].f1.real());
    f1i.add(rows[i].f1.imag());
    f2r.add(rows[i].f2.real());
    f2i.add(rows[i].f2.imag());
    f3r.add(rows[i].f3.real());
    f3i.add(rows[i].f3.imag());
    f4r.add(rows[i].f4.real());
    f4i.add(rows[i].f4.imag());
    f6r.add(rows[i].f6.real());
    f6i.add(rows[i].f6.imag());
  }
  out.sigma_ref = s_sigma.value();
  out.f0 = s_f0.value();
  out.f1 = {f1r.value(), f1i.value()};
  out.f2 = {f2r.value(), f2i.value()};
  out.f3 = {f3r.value(), f3i.value()};
  out.f4 = {f4r.value(), f4i.value()};
  out.f6 = {f6r.value(), f6i.value()};
  return out;
}

}  // namespace cpi::slice
