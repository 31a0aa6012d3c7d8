#include "dmle2e/channel/laser.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>

namespace dmle2e::channel {

namespace {

struct Jacobian {
  double nn, ns, sn, ss;
};

double gain(const LaserParams& p, double n, double s) {
  return p.gain_coeff * (n - p.transparency_density) / (1.0 + p.gain_compression * s);
}

Jacobian jacobian(const LaserState& y, const LaserParams& p) {
  const double n = y.carrier_density, s = y.photon_density;
  const double den = 1.0 + p.gain_compression * s;
  const double g = gain(p, n, s);
  const double dg_dn = p.gain_coeff / den;
  const double dg_ds = -p.gain_coeff * (n - p.transparency_density) * p.gain_compression / (den * den);
  Jacobian j;
  j.nn = -1.0 / p.carrier_lifetime - dg_dn * s;
  j.ns = -g - dg_ds * s;
  j.sn = p.confinement * dg_dn * s + p.confinement * p.spont_fraction / p.carrier_lifetime;
  j.ss = p.confinement * g + p.confinement * dg_ds * s - 1.0 / p.photon_lifetime;
  return j;
}

// Carrier density that zeroes dS/dt for a given photon density.
double clamped_carrier(const LaserParams& p, double s) {
  const double den = 1.0 + p.gain_compression * s;
  const double num = s / p.photon_lifetime + p.confinement * p.gain_coeff * p.transparency_density * s / den;
  const double lin = p.confinement * p.gain_coeff * s / den + p.confinement * p.spont_fraction / p.carrier_lifetime;
  return num / lin;
}

}  // namespace

void LaserParams::validate() const {
  const double fields[] = {active_volume,    confinement,     gain_coeff,     transparency_density,
                           gain_compression, carrier_lifetime, photon_lifetime, spont_fraction,
                           external_efficiency, electron_charge};
  for (double v : fields) {
    if (!(v > 0.0) || !std::isfinite(v)) throw InvalidArgument("laser parameters must be strictly positive");
  }
  if (spont_fraction >= 1.0) throw InvalidArgument("spontaneous emission fraction must lie in (0, 1)");
  if (external_efficiency > 1.0) throw InvalidArgument("external efficiency must lie in (0, 1] W/A");
}

double LaserParams::photon_scale() const {
  return confinement * photon_lifetime * transparency_density / carrier_lifetime;
}

double LaserParams::power_mw(double photon_density) const {
  return 1e3 * external_efficiency * electron_charge * active_volume * photon_density /
         (confinement * photon_lifetime);
}

double analytic_threshold_ma(const LaserParams& p) {
  const double n_th = p.transparency_density + 1.0 / (p.confinement * p.gain_coeff * p.photon_lifetime);
  return 1e3 * p.electron_charge * p.active_volume * n_th / p.carrier_lifetime;
}

LaserState rate_equations(const LaserState& y, double current_ma, const LaserParams& p) {
  const double n = y.carrier_density, s = y.photon_density;
  const double g = gain(p, n, s);
  const double pump = std::max(current_ma, 0.0) * 1e-3 / (p.electron_charge * p.active_volume);
  return {pump - n / p.carrier_lifetime - g * s,
          p.confinement * g * s - s / p.photon_lifetime + p.confinement * p.spont_fraction * n / p.carrier_lifetime};
}

SteadyState steady_state(double i_bias_ma, const LaserParams& p) {
  p.validate();
  if (i_bias_ma < 0.0) throw InvalidArgument("steady_state: bias current must be >= 0");
  if (i_bias_ma == 0.0) return {0.0, 0.0, 0.0, 0};

  const double pump = i_bias_ma * 1e-3 / (p.electron_charge * p.active_volume);
  auto carrier_balance = [&](double s) {
    const double n = clamped_carrier(p, s);
    return pump - n / p.carrier_lifetime - gain(p, n, s) * s;
  };

  // Bracket in log S: the balance is positive for vanishing S and negative once
  // the stimulated term alone exceeds the pump.
  const double s_ref = p.photon_scale();
  double lo = std::log(1e-30 * s_ref);
  double hi = std::log(10.0 * p.confinement * p.photon_lifetime * pump + s_ref);
  if (!(carrier_balance(std::exp(lo)) > 0.0) || !(carrier_balance(std::exp(hi)) < 0.0)) {
    throw NumericError("steady_state: could not bracket the photon density");
  }
  for (int i = 0; i < 80; ++i) {
    const double mid = 0.5 * (lo + hi);
    (carrier_balance(std::exp(mid)) > 0.0 ? lo : hi) = mid;
  }

  LaserState y{clamped_carrier(p, std::exp(0.5 * (lo + hi))), std::exp(0.5 * (lo + hi))};

  auto rel_residual = [&](const LaserState& st) {
    const LaserState f = rate_equations(st, i_bias_ma, p);
    const double g = gain(p, st.carrier_density, st.photon_density);
    const double scale_n = pump + st.carrier_density / p.carrier_lifetime + std::abs(g * st.photon_density);
    const double scale_s = std::abs(p.confinement * g * st.photon_density) + st.photon_density / p.photon_lifetime +
                           p.confinement * p.spont_fraction * st.carrier_density / p.carrier_lifetime;
    return std::max(std::abs(f.carrier_density) / scale_n, std::abs(f.photon_density) / scale_s);
  };

  // Damped Newton polish on the full 2x2 system.
  constexpr int kMaxIter = 200;
  double res = rel_residual(y);
  int iter = 0;
  while (res >= 1e-12 && iter < kMaxIter) {
    ++iter;
    const LaserState f = rate_equations(y, i_bias_ma, p);
    const Jacobian j = jacobian(y, p);
    const double det = j.nn * j.ss - j.ns * j.sn;
    const double dn = -(j.ss * f.carrier_density - j.ns * f.photon_density) / det;
    const double ds = -(-j.sn * f.carrier_density + j.nn * f.photon_density) / det;
    double step = 1.0;
    LaserState trial;
    double trial_res = res;
    for (int k = 0; k < 40; ++k) {
      trial = {y.carrier_density + step * dn, y.photon_density + step * ds};
      if (trial.carrier_density > 0.0 && trial.photon_density > 0.0) {
        trial_res = rel_residual(trial);
        if (trial_res < res) break;
      }
      step *= 0.5;
    }
    if (!(trial_res < res)) break;
    y = trial;
    res = trial_res;
  }
  if (!(res < 1e-10)) {
    std::ostringstream msg;
    msg << "steady_state did not converge at I=" << i_bias_ma << " mA after " << iter
        << " Newton iterations (relative residual " << res << ", N=" << y.carrier_density
        << ", S=" << y.photon_density << ")";
    throw NumericError(msg.str());
  }
  return {y.carrier_density, y.photon_density, p.power_mw(y.photon_density), iter};
}

SmallSignal small_signal(double i_bias_ma, const LaserParams& p) {
  const SteadyState ss = steady_state(i_bias_ma, p);
  const Jacobian j = jacobian({ss.carrier_density, ss.photon_density}, p);
  const double tr = j.nn + j.ss;
  const double det = j.nn * j.ss - j.ns * j.sn;
  const std::complex<double> disc = std::sqrt(std::complex<double>(0.25 * tr * tr - det, 0.0));
  SmallSignal out;
  out.damped_freq_hz = std::abs(disc.imag()) / (2.0 * std::numbers::pi);
  out.undamped_freq_hz = std::sqrt(std::max(det, 0.0)) / (2.0 * std::numbers::pi);
  out.damping_rate = -tr;
  return out;
}

sigproc::Waveform dml_simulate(const sigproc::Waveform& drive_ma, const LaserParams& p, double dt) {
  p.validate();
  if (!(dt > 0.0)) throw InvalidArgument("dml_simulate: time step must be positive");

  const Eigen::VectorXd& drive = drive_ma.samples();
  const double mean_drive = drive.mean();
  if (mean_drive > analytic_threshold_ma(p)) {
    const double fr = small_signal(mean_drive, p).undamped_freq_hz;
    if (dt > 1.0 / (20.0 * fr)) {
      throw InvalidArgument("dml_simulate: dt exceeds 1/(20 f_r) at the mean drive");
    }
  }

  const double ts = 1.0 / drive_ma.sample_rate();
  const int n_sub = static_cast<int>(std::ceil(ts / dt - 1e-9));
  const double h = ts / n_sub;

  // Work in units of N_tr and the photon scale for well-conditioned tolerances.
  const double n_scale = p.transparency_density;
  const double s_scale = p.photon_scale();
  auto rhs = [&](double n, double s, double i_ma, double& dn, double& ds) {
    const LaserState f = rate_equations({n * n_scale, s * s_scale}, i_ma, p);
    dn = f.carrier_density / n_scale;
    ds = f.photon_density / s_scale;
  };

  const SteadyState init = steady_state(std::max(drive[0], 0.0), p);
  double n = init.carrier_density / n_scale;
  double s = init.photon_density / s_scale;

  const Eigen::Index len = drive.size();
  Eigen::VectorXd out(len);
  out[0] = p.power_mw(s * s_scale);
  constexpr double kTol = -1e-12;
  for (Eigen::Index k = 0; k + 1 < len; ++k) {
    const double i0 = drive[k], i1 = drive[k + 1];
    for (int sub = 0; sub < n_sub; ++sub) {
      const double a0 = static_cast<double>(sub) / n_sub;
      const double am = (sub + 0.5) / n_sub;
      const double a1 = static_cast<double>(sub + 1) / n_sub;
      const double ia = i0 + (i1 - i0) * a0, im = i0 + (i1 - i0) * am, ib = i0 + (i1 - i0) * a1;
      double k1n, k1s, k2n, k2s, k3n, k3s, k4n, k4s;
      rhs(n, s, ia, k1n, k1s);
      rhs(n + 0.5 * h * k1n, s + 0.5 * h * k1s, im, k2n, k2s);
      rhs(n + 0.5 * h * k2n, s + 0.5 * h * k2s, im, k3n, k3s);
      rhs(n + h * k3n, s + h * k3s, ib, k4n, k4s);
      n += h / 6.0 * (k1n + 2.0 * k2n + 2.0 * k3n + k4n);
      s += h / 6.0 * (k1s + 2.0 * k2s + 2.0 * k3s + k4s);
      if (n < kTol || s < kTol || !std::isfinite(n) || !std::isfinite(s)) {
        std::ostringstream msg;
        msg << "dml_simulate: unstable integration at sample " << k << " (N/N_tr=" << n << ", S/S_ref=" << s
            << "); reduce dt below " << h;
        throw NumericError(msg.str());
      }
    }
    out[k + 1] = p.power_mw(s * s_scale);
  }
  return sigproc::Waveform(std::move(out), drive_ma.sample_rate());
}

}  // namespace dmle2e::channel
