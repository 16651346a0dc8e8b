#include "qmarkov/config.hpp"

#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

#include <json.hpp>

#include "qmarkov/errors.hpp"

namespace qmarkov {

using json = nlohmann::json;

const char* to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::discrete_qnd: return "discrete-qnd";
    case ExperimentKind::feedback: return "feedback";
    case ExperimentKind::reservoir: return "reservoir";
    case ExperimentKind::sme_diffusive: return "sme-diffusive";
    case ExperimentKind::sme_jump: return "sme-jump";
    case ExperimentKind::wigner: return "wigner";
    case ExperimentKind::verify: return "verify";
  }
  return "unknown";
}

namespace {

std::string join(const std::vector<std::string>& items) {
  std::string out = "invalid configuration:";
  for (const auto& s : items) out += "\n  " + s;
  return out;
}

// Reads one JSON object, remembering which keys were consumed so leftovers
// can be reported as unknown.
class Section {
 public:
  Section(const json* node, std::string path, std::vector<std::string>& errors)
      : node_(node), path_(std::move(path)), errors_(errors) {
    if (node_ && !node_->is_object()) {
      errors_.push_back(where("") + " must be an object");
      node_ = nullptr;
    }
  }

  bool present() const { return node_ != nullptr; }

  template <class T>
  void read(const char* key, T& out, bool required = false) {
    seen_.insert(key);
    if (!node_ || !node_->contains(key)) {
      if (required) errors_.push_back(where(key) + " is required");
      return;
    }
    const json& v = (*node_)[key];
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw std::invalid_argument("expected a boolean");
      } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer()) throw std::invalid_argument("expected an integer");
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!v.is_number()) throw std::invalid_argument("expected a number");
      } else {
        if (!v.is_string()) throw std::invalid_argument("expected a string");
      }
      out = v.get<T>();
    } catch (const std::exception& e) {
      errors_.push_back(where(key) + ": " + e.what());
    }
  }

  Section child(const char* key, bool required = false) {
    seen_.insert(key);
    const json* c = nullptr;
    if (node_ && node_->contains(key)) c = &(*node_)[key];
    if (!c && required) errors_.push_back(where(key) + " section is required");
    return Section(c, where(key), errors_);
  }

  /// Reports keys that were never read.
  void finish() {
    if (!node_) return;
    for (auto it = node_->begin(); it != node_->end(); ++it) {
      if (!seen_.count(it.key())) errors_.push_back(where(it.key()) + " is not a recognized key");
    }
  }

  std::string where(const std::string& key) const {
    if (path_.empty()) return key;
    return key.empty() ? path_ : path_ + "." + key;
  }

 private:
  const json* node_;
  std::string path_;
  std::vector<std::string>& errors_;
  std::set<std::string> seen_;
};

void check(bool ok, std::vector<std::string>& errors, const std::string& message) {
  if (!ok) errors.push_back(message);
}

std::string num(double v) {
  std::ostringstream s;
  s << v;
  return s.str();
}

void check_unit(double v, const std::string& name, std::vector<std::string>& errors) {
  check(v >= 0.0 && v <= 1.0, errors, name + " = " + num(v) + " outside [0, 1]");
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : std::runtime_error(join(problems)), problems_(std::move(problems)) {}

DensityOperator make_state(const InitialState& s, int n_max) {
  switch (s.type) {
    case InitialState::Type::fock: return DensityOperator::fock(s.n, n_max);
    case InitialState::Type::coherent: return DensityOperator::pure(coherent_state(s.alpha, n_max));
    case InitialState::Type::mixed: return DensityOperator::maximally_mixed(HilbertSpace::fock(n_max));
    case InitialState::Type::cat: {
      const Vec v = coherent_state(s.alpha, n_max).amplitudes() +
                    I_unit * coherent_state(-s.alpha, n_max).amplitudes();
      return DensityOperator::pure(StateVector::normalized(HilbertSpace::fock(n_max), v));
    }
  }
  throw Error(ErrorCode::invalid_argument, "unknown initial state");
}

HilbertSpace sme_space(const SMESettings& s) {
  return s.model == SMESettings::Model::qubit ? HilbertSpace::qubit() : HilbertSpace::fock(s.n_max);
}

JumpDiffusiveSMEModel make_sme_model(const SMESettings& s, bool with_counter) {
  DiffusiveSMEModel base = [&] {
    switch (s.model) {
      case SMESettings::Model::damped_oscillator: {
        const auto ops = ladder_ops(s.n_max);
        return DiffusiveSMEModel((I_unit * s.u) * (ops.a_dag - ops.a),
                                 {{std::sqrt(s.kappa) * ops.a, s.eta}});
      }
      case SMESettings::Model::qubit: {
        const auto p = pauli_ops();
        return DiffusiveSMEModel((0.5 * s.omega) * p.sx, {{std::sqrt(s.kappa) * p.sm, s.eta}});
      }
      case SMESettings::Model::cat_qubit: {
        const auto m = cat_qubit_model(s.r, s.u, s.kappa, s.n_max);
        auto channels = m.channels();
        channels.front().eta = s.eta;
        return DiffusiveSMEModel(m.hamiltonian(), channels);
      }
      case SMESettings::Model::catkerr: {
        const auto m = catkerr_model(s.u, s.kappa, s.kappa_c, s.n_max);
        auto channels = m.channels();
        channels.front().eta = s.eta;
        return DiffusiveSMEModel(m.hamiltonian(), channels);
      }
    }
    throw Error(ErrorCode::invalid_argument, "unknown continuous-time model");
  }();
  if (!with_counter) return JumpDiffusiveSMEModel(std::move(base));
  const Operator v = s.model == SMESettings::Model::qubit
                         ? std::sqrt(s.gamma) * pauli_ops().sm
                         : std::sqrt(s.gamma) * ladder_ops(s.n_max).a;
  RMat crosstalk(1, 1);
  crosstalk(0, 0) = s.counter_efficiency;
  return JumpDiffusiveSMEModel(std::move(base), {{v, s.theta_bar}}, crosstalk);
}

ExperimentConfig parse_config(const std::string& text) {
  std::vector<std::string> errors;
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError({std::string("malformed JSON: ") + e.what()});
  }

  ExperimentConfig cfg;
  Section top(&root, "", errors);
  if (!top.present()) throw ConfigError(errors);

  std::string kind;
  top.read("kind", kind, true);
  static const std::vector<std::pair<std::string, ExperimentKind>> kinds = {
      {"discrete-qnd", ExperimentKind::discrete_qnd}, {"feedback", ExperimentKind::feedback},
      {"reservoir", ExperimentKind::reservoir},       {"sme-diffusive", ExperimentKind::sme_diffusive},
      {"sme-jump", ExperimentKind::sme_jump},         {"wigner", ExperimentKind::wigner},
      {"verify", ExperimentKind::verify}};
  bool known = kind.empty();
  for (const auto& [name, k] : kinds) {
    if (name == kind) {
      cfg.kind = k;
      known = true;
    }
  }
  if (!known) errors.push_back("kind = \"" + kind + "\" is not a recognized experiment kind");
  if (kind.empty() || !known) throw ConfigError(errors);

  const auto k = cfg.kind;
  const bool discrete = k == ExperimentKind::discrete_qnd || k == ExperimentKind::feedback;
  const bool continuous = k == ExperimentKind::sme_diffusive || k == ExperimentKind::sme_jump;
  const bool ensemble_kind = discrete || continuous;

  top.read("seed", cfg.seed, ensemble_kind);
  top.read("ensemble", cfg.ensemble, ensemble_kind);
  top.read("steps", cfg.steps, discrete);
  check(!ensemble_kind || cfg.ensemble >= 1, errors, "ensemble = " + num(cfg.ensemble) + " must be >= 1");
  check(!discrete || cfg.steps >= 1, errors, "steps = " + num(cfg.steps) + " must be >= 1");

  {
    Section out = top.child("output");
    out.read("directory", cfg.output);
    out.read("records", cfg.write_records);
    out.read("snapshot_stride", cfg.snapshot_stride);
    check(cfg.snapshot_stride >= 0, errors, "output.snapshot_stride must be >= 0");
    out.finish();
  }

  {
    Section qnd = top.child("qnd", discrete);
    qnd.read("phi0", cfg.qnd.phi0, discrete);
    qnd.read("phi_r", cfg.qnd.phi_r, discrete);
    qnd.read("n_max", cfg.qnd.n_max, discrete);
    qnd.finish();
    if (discrete) {
      check(cfg.qnd.n_max >= 1, errors, "qnd.n_max = " + num(cfg.qnd.n_max) + " must be >= 1");
      if (cfg.qnd.n_max >= 1 && !cfg.qnd.injective()) {
        cfg.warnings.push_back("n -> cos^2((phi0 n + phi_r)/2) is not injective on {0..n_max}");
      }
    }
  }

  {
    Section err = top.child("errors");
    err.read("eta_g", cfg.errors.eta_g);
    err.read("eta_e", cfg.errors.eta_e);
    err.finish();
    check_unit(cfg.errors.eta_g, "errors.eta_g", errors);
    check_unit(cfg.errors.eta_e, "errors.eta_e", errors);
  }

  {
    const bool needed = k == ExperimentKind::feedback;
    Section ly = top.child("lyapunov", needed);
    int n_bar = 2;
    double epsilon = 0.1, u_bar = 1.0;
    int grid = 41;
    ly.read("n_bar", n_bar, needed);
    ly.read("epsilon", epsilon);
    ly.read("u_bar", u_bar);
    ly.read("grid_count", grid);
    ly.finish();
    if (needed) {
      bool ok = true;
      if (n_bar < 0 || n_bar > cfg.qnd.n_max) {
        errors.push_back("lyapunov.n_bar = " + num(n_bar) + " outside [0, qnd.n_max = " +
                         num(cfg.qnd.n_max) + "]");
        ok = false;
      }
      if (!(epsilon > 0.0)) {
        errors.push_back("lyapunov.epsilon = " + num(epsilon) + " must be > 0");
        ok = false;
      }
      if (!(u_bar >= 0.0) || u_bar * u_bar > cfg.qnd.n_max / 4.0) {
        errors.push_back("lyapunov.u_bar = " + num(u_bar) + " must satisfy 0 <= u_bar^2 <= n_max/4");
        ok = false;
      }
      if (grid < 1 || grid % 2 == 0) {
        errors.push_back("lyapunov.grid_count = " + num(grid) + " must be odd and positive");
        ok = false;
      }
      if (ok && cfg.qnd.n_max >= 1) cfg.lyapunov = LyapunovParams::make(n_bar, cfg.qnd.n_max, epsilon, u_bar, grid);
    }
  }

  {
    Section loop = top.child("loop");
    loop.read("delay", cfg.loop.delay);
    loop.read("u_init", cfg.loop.u_init);
    loop.read("predict", cfg.loop.predict);
    loop.read("success_fidelity", cfg.loop.success_fidelity);
    loop.read("stop_on_success", cfg.loop.stop_on_success);
    loop.finish();
    check(cfg.loop.delay >= 0, errors, "loop.delay = " + num(cfg.loop.delay) + " must be >= 0");
    check_unit(cfg.loop.success_fidelity, "loop.success_fidelity", errors);
    if (k == ExperimentKind::feedback) {
      const auto grid = cfg.lyapunov.control_grid();
      bool member = false;
      for (double u : grid) member = member || u == cfg.loop.u_init;
      check(member, errors, "loop.u_init = " + num(cfg.loop.u_init) + " is not on the control grid");
    }
  }

  {
    const bool needed = k == ExperimentKind::wigner;
    Section init = top.child("initial", needed);
    std::string type = discrete ? (k == ExperimentKind::feedback ? "fock" : "mixed") : "fock";
    init.read("type", type, needed);
    init.read("n", cfg.initial.n);
    init.read("alpha", cfg.initial.alpha);
    init.finish();
    if (type == "fock") cfg.initial.type = InitialState::Type::fock;
    else if (type == "coherent") cfg.initial.type = InitialState::Type::coherent;
    else if (type == "mixed") cfg.initial.type = InitialState::Type::mixed;
    else if (type == "cat") cfg.initial.type = InitialState::Type::cat;
    else errors.push_back("initial.type = \"" + type + "\" must be fock, coherent, mixed or cat");
  }

  {
    Section conv = top.child("convergence");
    conv.read("threshold", cfg.convergence_threshold);
    conv.read("confidence_z", cfg.confidence_z);
    conv.finish();
    check_unit(cfg.convergence_threshold, "convergence.threshold", errors);
    check(cfg.confidence_z > 0.0, errors, "convergence.confidence_z must be > 0");
  }

  {
    Section res = top.child("reservoir");
    auto& r = cfg.reservoir;
    res.read("u", r.params.u);
    res.read("n_max", r.params.n_max);
    res.read("sign", r.params.sign);
    res.read("starts", r.starts);
    res.read("max_iterations", r.max_iterations);
    res.read("tolerance", r.tolerance);
    res.finish();
    if (k == ExperimentKind::reservoir) {
      check(r.params.u >= 0.0 && r.params.u < std::numbers::pi / 2, errors,
            "reservoir.u = " + num(r.params.u) + " outside [0, pi/2)");
      check(r.params.sign == 1 || r.params.sign == -1, errors, "reservoir.sign must be +1 or -1");
      check(r.params.n_max >= 2, errors, "reservoir.n_max must be >= 2");
      check(r.starts >= 1, errors, "reservoir.starts must be >= 1");
      check(r.max_iterations >= 1, errors, "reservoir.max_iterations must be >= 1");
      check(r.tolerance > 0.0, errors, "reservoir.tolerance must be > 0");
    }
  }

  {
    Section sme = top.child("sme", continuous);
    auto& s = cfg.sme;
    std::string model = "damped-oscillator";
    sme.read("model", model, continuous);
    sme.read("n_max", s.n_max);
    sme.read("u", s.u);
    sme.read("kappa", s.kappa);
    sme.read("kappa_c", s.kappa_c);
    sme.read("r", s.r);
    sme.read("omega", s.omega);
    sme.read("eta", s.eta);
    sme.read("dt", s.dt, continuous);
    sme.read("horizon", s.horizon, continuous);
    sme.read("gamma", s.gamma);
    sme.read("theta_bar", s.theta_bar);
    sme.read("counter_efficiency", s.counter_efficiency);
    sme.finish();
    if (model == "damped-oscillator") s.model = SMESettings::Model::damped_oscillator;
    else if (model == "qubit") s.model = SMESettings::Model::qubit;
    else if (model == "cat-qubit") s.model = SMESettings::Model::cat_qubit;
    else if (model == "catkerr") s.model = SMESettings::Model::catkerr;
    else errors.push_back("sme.model = \"" + model + "\" must be damped-oscillator, qubit, cat-qubit or catkerr");
    if (continuous) {
      check(s.n_max >= 1, errors, "sme.n_max must be >= 1");
      check(s.kappa > 0.0, errors, "sme.kappa must be > 0");
      check(s.u >= 0.0, errors, "sme.u must be >= 0");
      check(s.kappa_c > 0.0, errors, "sme.kappa_c must be > 0");
      check(s.r >= 2, errors, "sme.r must be >= 2");
      check_unit(s.eta, "sme.eta", errors);
      check(s.dt > 0.0 && s.horizon >= s.dt, errors, "sme.dt and sme.horizon must satisfy 0 < dt <= horizon");
      check(s.gamma >= 0.0, errors, "sme.gamma must be >= 0");
      check(s.theta_bar >= 0.0, errors, "sme.theta_bar must be >= 0");
      check_unit(s.counter_efficiency, "sme.counter_efficiency", errors);
      if (s.model == SMESettings::Model::cat_qubit || s.model == SMESettings::Model::catkerr) {
        check(s.u > 0.0, errors, "sme.u must be > 0 for the cat models");
      }
    }
  }

  {
    Section w = top.child("wigner");
    auto& g = cfg.wigner.grid;
    w.read("n_max", cfg.wigner.n_max);
    w.read("x_min", g.x_min);
    w.read("x_max", g.x_max);
    w.read("p_min", g.p_min);
    w.read("p_max", g.p_max);
    w.read("n_x", g.n_x);
    w.read("n_p", g.n_p);
    w.finish();
    if (k == ExperimentKind::wigner) {
      check(g.n_x >= 1 && g.n_p >= 1, errors, "wigner.n_x and wigner.n_p must be >= 1");
      check(g.x_max >= g.x_min && g.p_max >= g.p_min, errors, "wigner grid bounds are inverted");
      const int n_max = cfg.wigner.n_max;
      const double ex = std::max(std::abs(g.x_min), std::abs(g.x_max));
      const double ep = std::max(std::abs(g.p_min), std::abs(g.p_max));
      check(ex * ex + ep * ep <= n_max / 4.0 + 1e-12, errors,
            "wigner grid corner |alpha|^2 = " + num(ex * ex + ep * ep) + " exceeds n_max/4 = " +
                num(n_max / 4.0));
    }
  }

  // Initial-state range checks depend on the active truncation.
  const int n_max = discrete ? cfg.qnd.n_max
                    : k == ExperimentKind::wigner ? cfg.wigner.n_max
                    : continuous ? cfg.sme.n_max
                                 : -1;
  if (n_max >= 1 && !(continuous && cfg.sme.model == SMESettings::Model::qubit)) {
    const auto& s = cfg.initial;
    if (s.type == InitialState::Type::fock) {
      check(s.n >= 0 && s.n <= n_max, errors, "initial.n = " + num(s.n) + " outside [0, n_max]");
    }
    if (s.type == InitialState::Type::coherent || s.type == InitialState::Type::cat) {
      check(s.alpha * s.alpha <= n_max / 4.0 + 1e-12, errors,
            "initial.alpha^2 = " + num(s.alpha * s.alpha) + " exceeds n_max/4 = " + num(n_max / 4.0));
    }
  }
  if (continuous && cfg.sme.model == SMESettings::Model::qubit) {
    const auto& s = cfg.initial;
    check((s.type == InitialState::Type::fock && s.n >= 0 && s.n <= 1) ||
              s.type == InitialState::Type::mixed,
          errors, "qubit runs take initial.type fock (n = 0 for g, 1 for e) or mixed");
  }

  top.finish();
  if (!errors.empty()) throw ConfigError(errors);
  return cfg;
}

}  // namespace qmarkov
