#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "qmarkov/photonbox.hpp"
#include "qmarkov/sme.hpp"

namespace qmarkov {

enum class ExperimentKind { discrete_qnd, feedback, reservoir, sme_diffusive, sme_jump, wigner, verify };

const char* to_string(ExperimentKind kind);

/// Initial state of an oscillator run.
struct InitialState {
  enum class Type { fock, coherent, mixed, cat } type = Type::fock;
  int n = 0;            // fock
  double alpha = 0.0;   // coherent / cat amplitude (real)
};

DensityOperator make_state(const InitialState& s, int n_max);

struct LoopSettings {
  int delay = 0;
  double u_init = 0.0;
  bool predict = false;
  double success_fidelity = 0.95;
  bool stop_on_success = false;
};

struct ReservoirSettings {
  ReservoirParams params;
  int starts = 5;
  int max_iterations = 1000;
  double tolerance = 1e-10;
};

/// Continuous-time model presets.
struct SMESettings {
  enum class Model { damped_oscillator, qubit, cat_qubit, catkerr } model = Model::damped_oscillator;
  int n_max = 10;
  double u = 0.5;        // drive
  double kappa = 1.0;    // damping
  double kappa_c = 0.5;  // catkerr parity channel
  int r = 2;             // cat-qubit order
  double omega = 1.0;    // qubit Rabi frequency
  double eta = 0.0;      // efficiency of the measured channel
  double dt = 1e-3;
  double horizon = 1.0;
  // Counter for sme-jump: V = sqrt(gamma) a (sigma_- for the qubit).
  double gamma = 0.0;
  double theta_bar = 0.0;
  double counter_efficiency = 1.0;
};

JumpDiffusiveSMEModel make_sme_model(const SMESettings& s, bool with_counter);
HilbertSpace sme_space(const SMESettings& s);

struct WignerSettings {
  WignerGridSpec grid;
  int n_max = 20;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::verify;
  std::uint64_t seed = 0;
  int ensemble = 1;
  int steps = 0;
  std::string output = "out";
  bool write_records = true;
  int snapshot_stride = 0;

  DispersiveParams qnd;
  DetectionErrorParams errors;
  LyapunovParams lyapunov;
  LoopSettings loop;
  InitialState initial;
  ReservoirSettings reservoir;
  SMESettings sme;
  WignerSettings wigner;
  double convergence_threshold = 0.99;
  double confidence_z = 2.5758293035489004;  // two-sided 99%

  std::vector<std::string> warnings;
};

/// Validation failure carrying every problem found.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

/// Parses a JSON experiment description. Unknown keys are errors.
ExperimentConfig parse_config(const std::string& text);

}  // namespace qmarkov
