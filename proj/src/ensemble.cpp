#include "backreact/ensemble.hpp"

#include <bit>
#include <cmath>
#include <map>
#include <numeric>
#include <string>
#include <unordered_map>

#include "backreact/errors.hpp"
#include "backreact/parallel.hpp"
#include "backreact/sampling.hpp"

namespace backreact {
namespace {

constexpr std::uint64_t kInitialStream = 1;
constexpr std::uint64_t kResampleStream = 2;

bool same_bits(double a, double b) {
  return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b);
}

bool same_amplitudes(const WaveFunction& a, const WaveFunction& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t j = 0; j < a.size(); ++j) {
    if (!same_bits(a[j].real(), b[j].real()) || !same_bits(a[j].imag(), b[j].imag())) {
      return false;
    }
  }
  return true;
}

}  // namespace

bool identical(const Replica& a, const Replica& b) {
  return same_bits(a.classical.position, b.classical.position) &&
         same_bits(a.classical.momentum, b.classical.momentum) && same_bits(a.y, b.y) &&
         a.flags == b.flags && (a.psi == b.psi || same_amplitudes(*a.psi, *b.psi));
}

InitialMixture::InitialMixture(std::vector<MixtureComponent> components)
    : components_(std::move(components)) {
  if (components_.empty()) throw InvalidArgument("mixture: no components");
  double total = 0.0;
  for (const auto& c : components_) {
    if (!(c.weight > 0.0 && c.weight <= 1.0)) {
      throw InvalidArgument("mixture: weights must lie in (0, 1]");
    }
    if (std::abs(c.psi.norm() - 1.0) > 1e-10) {
      throw InvalidArgument("mixture: component wavefunction not normalized");
    }
    if (!(c.psi.grid() == components_.front().psi.grid())) {
      throw InvalidArgument("mixture: components live on different grids");
    }
    if (const auto* g = std::get_if<ClassicalGaussian>(&c.classical)) {
      if (!(g->sd_position >= 0.0) || !(g->sd_momentum >= 0.0)) {
        throw InvalidArgument("mixture: classical standard deviations must be non-negative");
      }
    }
    total += c.weight;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw InvalidArgument("mixture: weights sum to " + std::to_string(total) + ", not 1");
  }
}

std::size_t Ensemble::flagged_count() const noexcept {
  return static_cast<std::size_t>(std::count_if(replicas.begin(), replicas.end(),
                                                [](const Replica& r) { return r.flags.any(); }));
}

Ensemble sample_initial_ensemble(const InitialMixture& mixture, std::size_t count,
                                 std::uint64_t seed, const HybridModel& model, double dt,
                                 GuidanceSettings guidance) {
  if (count < 2) throw InvalidArgument("sample_initial_ensemble: need at least 2 replicas");
  const auto& comps = mixture.components();
  std::vector<std::shared_ptr<const WaveFunction>> shared_psi;
  std::vector<GridCdf> cdfs;
  for (const auto& c : comps) {
    shared_psi.push_back(std::make_shared<const WaveFunction>(c.psi));
    cdfs.emplace_back(c.psi.grid(), c.psi.density());
  }
  Ensemble e{{}, 0.0, seed, model, dt, guidance};
  e.replicas.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    ReplicaRng rng(seed, i, kInitialStream);
    const double pick = rng.uniform();
    std::size_t which = comps.size() - 1;
    double acc = 0.0;
    for (std::size_t c = 0; c < comps.size(); ++c) {
      acc += comps[c].weight;
      if (pick < acc) {
        which = c;
        break;
      }
    }
    Replica& r = e.replicas[i];
    if (const auto* p = std::get_if<ClassicalPoint>(&comps[which].classical)) {
      r.classical = {p->position, p->momentum};
    } else {
      const auto& g = std::get<ClassicalGaussian>(comps[which].classical);
      const double zx = rng.normal();
      const double zk = rng.normal();
      r.classical = {g.mean_position + g.sd_position * zx, g.mean_momentum + g.sd_momentum * zk};
    }
    r.psi = shared_psi[which];
    r.y = cdfs[which].inverse(rng.uniform());
  }
  return e;
}

ReplicaStepper::ReplicaStepper(const HybridModel& model, const SpatialGrid& grid, double dt,
                               GuidanceSettings guidance)
    : model_(model), dt_(dt), guidance_(guidance), propagator_(model, grid, dt) {
  if (!(dt > 0.0)) throw InvalidArgument("step_replica: dt must be positive");
}

ClassicalState ReplicaStepper::classical_half(const Replica& r) const {
  return classical_kick_drift(r.classical, r.y, dt_, model_);
}

ReplicaStepper::QuantumUpdate ReplicaStepper::quantum(const Replica& r, double mid_big_x) const {
  return quantum(*r.psi, r.guidance, mid_big_x);
}

ReplicaStepper::QuantumUpdate ReplicaStepper::quantum(
    const WaveFunction& psi, const std::shared_ptr<const VelocityField>& guidance,
    double mid_big_x) const {
  QuantumUpdate q;
  q.field_now = guidance ? guidance
                         : std::make_shared<const VelocityField>(
                               velocity_field(psi, model_, guidance_.node_threshold));
  // (b) and (d): only the endpoints feed the guidance fields, so the two
  // halves are applied as one fused Strang step.
  auto next = std::make_shared<const WaveFunction>(propagator_.step(psi, mid_big_x));
  q.field_next = std::make_shared<const VelocityField>(
      velocity_field(*next, model_, guidance_.node_threshold));
  q.boundary = next->touches_boundary();
  q.psi_next = std::move(next);
  return q;
}

void ReplicaStepper::finish_in_place(Replica& r, const ClassicalState& half,
                                     const QuantumUpdate& q) const {
  finish_in_place(r, half, FieldView(*q.field_now, guidance_.interpolation_order),
                  FieldView(*q.field_next, guidance_.interpolation_order), q.boundary);
}

void ReplicaStepper::finish_in_place(Replica& r, const ClassicalState& half,
                                     const FieldView& now, const FieldView& next,
                                     bool boundary) const {
  const auto b = advance_bohmian(r.y, now, next, dt_);
  r.y = b.y;
  r.classical = classical_drift_kick(half, b.y, dt_, model_);
  r.flags.node_proximity = r.flags.node_proximity || b.near_node;
  r.flags.boundary = r.flags.boundary || b.escaped || boundary;
}

Replica ReplicaStepper::finish(const Replica& r, const ClassicalState& half,
                               const QuantumUpdate& q) const {
  Replica out = r;
  finish_in_place(out, half, q);
  out.psi = q.psi_next;
  out.guidance = q.field_next;
  return out;
}

Replica ReplicaStepper::step(const Replica& r) const {
  const ClassicalState half = classical_half(r);
  return finish(r, half, quantum(r, half.position));
}

Replica step_replica(const Replica& r, double dt, const HybridModel& model,
                     GuidanceSettings guidance) {
  return ReplicaStepper(model, r.psi->grid(), dt, guidance).step(r);
}

namespace {

std::size_t step_count(const Ensemble& e, double t_target) {
  const double span = t_target - e.time;
  if (!(span >= 0.0)) throw InvalidArgument("evolve: target time precedes ensemble time");
  const double ratio = span / e.dt;
  const double n = std::round(ratio);
  const double scale = std::max({std::abs(t_target), std::abs(e.time), e.dt});
  if (std::abs(span - n * e.dt) > 4.0 * std::numeric_limits<double>::epsilon() * scale * std::max(1.0, n)) {
    throw InvalidArgument("evolve: interval " + std::to_string(span) +
                          " is not a whole number of steps of " + std::to_string(e.dt));
  }
  return static_cast<std::size_t>(n);
}

// Replicas sharing psi, cached guidance and mid-step X form a group that
// receives one quantum update. Groups own the wavefunction pointers while an
// evolve call runs, and only ever split.
struct Group {
  std::vector<std::size_t> members;
  std::shared_ptr<const WaveFunction> psi;
  std::shared_ptr<const VelocityField> guidance;
};

std::vector<Group> initial_groups(const std::vector<Replica>& replicas) {
  std::vector<Group> groups;
  std::map<std::pair<const void*, const void*>, std::size_t> index;
  for (std::size_t i = 0; i < replicas.size(); ++i) {
    auto key = std::make_pair(static_cast<const void*>(replicas[i].psi.get()),
                              static_cast<const void*>(replicas[i].guidance.get()));
    auto [it, inserted] = index.try_emplace(key, groups.size());
    if (inserted) groups.push_back({{}, replicas[i].psi, replicas[i].guidance});
    groups[it->second].members.push_back(i);
  }
  return groups;
}

void split_by_position(std::vector<Group>& groups, const std::vector<ClassicalState>& half) {
  std::vector<Group> extra;
  for (auto& g : groups) {
    const double x0 = half[g.members.front()].position;
    const bool uniform = std::all_of(g.members.begin(), g.members.end(), [&](std::size_t i) {
      return same_bits(half[i].position, x0);
    });
    if (uniform) continue;
    std::map<std::uint64_t, std::size_t> slot;
    std::vector<std::vector<std::size_t>> parts;
    for (std::size_t i : g.members) {
      auto [it, inserted] =
          slot.try_emplace(std::bit_cast<std::uint64_t>(half[i].position), parts.size());
      if (inserted) parts.emplace_back();
      parts[it->second].push_back(i);
    }
    g.members = std::move(parts.front());
    for (std::size_t p = 1; p < parts.size(); ++p) {
      extra.push_back({std::move(parts[p]), g.psi, g.guidance});
    }
  }
  for (auto& g : extra) groups.push_back(std::move(g));
}

}  // namespace

Ensemble evolve(const Ensemble& e, double t_target, unsigned threads) {
  const std::size_t steps = step_count(e, t_target);
  Ensemble out = e;
  if (steps == 0 || e.replicas.empty()) {
    out.time = steps == 0 ? e.time : t_target;
    return out;
  }
  const ReplicaStepper stepper(e.model, e.grid(), e.dt, e.guidance);
  auto groups = initial_groups(out.replicas);
  auto& reps = out.replicas;
  for (auto& r : reps) {
    r.psi.reset();
    r.guidance.reset();
  }
  const std::size_t n = reps.size();
  std::vector<ClassicalState> half(n);
  std::vector<ReplicaStepper::QuantumUpdate> updates;
  for (std::size_t s = 0; s < steps; ++s) {
    parallel_for(n, threads, [&](std::size_t i) { half[i] = stepper.classical_half(reps[i]); });
    split_by_position(groups, half);
    updates.assign(groups.size(), {});
    parallel_for(groups.size(), threads, [&](std::size_t g) {
      const double mid_big_x = half[groups[g].members.front()].position;
      updates[g] = stepper.quantum(*groups[g].psi, groups[g].guidance, mid_big_x);
    });
    parallel_for(groups.size(), threads, [&](std::size_t g) {
      const auto& q = updates[g];
      const FieldView now(*q.field_now, stepper.interpolation_order());
      const FieldView next(*q.field_next, stepper.interpolation_order());
      for (std::size_t i : groups[g].members) stepper.finish_in_place(reps[i], half[i], now, next, q.boundary);
      groups[g].psi = std::move(updates[g].psi_next);
      groups[g].guidance = std::move(updates[g].field_next);
    });
  }
  for (const auto& g : groups) {
    for (std::size_t i : g.members) {
      reps[i].psi = g.psi;
      reps[i].guidance = g.guidance;
    }
  }
  out.time = t_target;
  return out;
}

Ensemble resample_bohmian(const Ensemble& e, std::uint64_t seed) {
  Ensemble out = e;
  std::unordered_map<const WaveFunction*, GridCdf> cdfs;
  for (std::size_t i = 0; i < out.replicas.size(); ++i) {
    Replica& r = out.replicas[i];
    auto it = cdfs.find(r.psi.get());
    if (it == cdfs.end()) {
      it = cdfs.emplace(r.psi.get(), GridCdf(r.psi->grid(), r.psi->density())).first;
    }
    ReplicaRng rng(seed, i, kResampleStream);
    r.y = it->second.inverse(rng.uniform());
    r.flags = {};
  }
  return out;
}

Estimate mean_and_error(const std::vector<double>& samples) {
  Estimate est;
  const std::size_t n = samples.size();
  if (n == 0) return est;
  // Shifted by the first sample so identical samples give an exact mean and zero error.
  const double shift = samples.front();
  double sum = 0.0;
  for (double v : samples) sum += v - shift;
  const double offset = sum / static_cast<double>(n);
  est.mean = shift + offset;
  if (n < 2) return est;
  double ss = 0.0;
  for (double v : samples) ss += (v - shift - offset) * (v - shift - offset);
  est.standard_error =
      std::sqrt(ss / static_cast<double>(n - 1)) / std::sqrt(static_cast<double>(n));
  return est;
}

std::vector<std::pair<std::string, Estimate>> EnsembleObservables::named() const {
  return {{"x_q", quantum_position},
          {"x_q2", quantum_position_squared},
          {"X", classical_position},
          {"K", classical_momentum},
          {"X2", classical_position_squared},
          {"E_qexp", energy_expectation},
          {"E_point", energy_point}};
}

EnsembleObservables ensemble_observables(const Ensemble& e) {
  const std::size_t n = e.replicas.size();
  if (n < 2) throw InvalidArgument("ensemble_observables: need at least 2 replicas");
  const auto& model = e.model;
  std::unordered_map<const WaveFunction*, QuantumExpectations> cache;
  std::vector<double> xq(n), xq2(n), big_x(n), big_k(n), big_x2(n), e_exp(n), e_pt(n);
  std::vector<double> tq(n), vq(n), vexp(n), vpt(n), tc(n), vc(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Replica& r = e.replicas[i];
    auto it = cache.find(r.psi.get());
    if (it == cache.end()) it = cache.emplace(r.psi.get(), quantum_expectations(*r.psi, 0.0, model)).first;
    const auto& q = it->second;
    // Bilinear coupling: <psi|V_int(x, X)|psi> = V_int(<x>, X).
    const double coupling = model.coupling(q.position, r.classical.position);
    const double big_kin = r.classical.momentum * r.classical.momentum / (2.0 * model.classical_mass());
    const double big_pot = model.classical_potential(r.classical.position);
    xq[i] = q.position;
    xq2[i] = q.position_squared;
    big_x[i] = r.classical.position;
    big_k[i] = r.classical.momentum;
    big_x2[i] = r.classical.position * r.classical.position;
    tq[i] = q.kinetic;
    vq[i] = q.quantum_potential;
    vexp[i] = coupling;
    vpt[i] = model.coupling(r.y, r.classical.position);
    tc[i] = big_kin;
    vc[i] = big_pot;
    e_exp[i] = tq[i] + vq[i] + vexp[i] + tc[i] + vc[i];
    e_pt[i] = tq[i] + vq[i] + vpt[i] + tc[i] + vc[i];
  }
  EnsembleObservables o;
  o.count = n;
  o.quantum_position = mean_and_error(xq);
  o.quantum_position_squared = mean_and_error(xq2);
  o.classical_position = mean_and_error(big_x);
  o.classical_momentum = mean_and_error(big_k);
  o.classical_position_squared = mean_and_error(big_x2);
  o.energy_expectation = mean_and_error(e_exp);
  o.energy_point = mean_and_error(e_pt);
  o.quantum_kinetic = mean_and_error(tq).mean;
  o.quantum_potential = mean_and_error(vq).mean;
  o.coupling_expectation = mean_and_error(vexp).mean;
  o.coupling_point = mean_and_error(vpt).mean;
  o.classical_kinetic = mean_and_error(tc).mean;
  o.classical_potential = mean_and_error(vc).mean;
  return o;
}

}  // namespace backreact
