"""Photon-counting simulation of the truth-table and tomography protocols.

Randomness: every acquisition gets its own counter-based Philox stream keyed
by ``(seed, *key)``, so runs can execute in any order or concurrently and
still merge to identical results.
"""

from __future__ import annotations

import math
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Sequence

import numpy as np

from . import circuits, gates, tomography
from .circuits import Netlist
from .components import Component
from .hilbert import DensityMatrix, ModeBasis, StateVector, uhlmann_fidelity

# stream purposes
TRUTH_TABLE, TOMOGRAPHY, SINGLE = 1, 2, 0


def stream(seed: int, *key: int) -> np.random.Generator:
    """Independent Philox generator for ``(seed, *key)``."""
    if seed is None:
        raise ValueError("a seed is required for stochastic runs")
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def gate_code(name: str) -> int:
    return zlib.crc32(name.encode())


@dataclass(frozen=True)
class SourceModel:
    heralded_rate: float = 9000.0  # photons / s
    acquisition_time: float = 10.0  # s
    coincidence_window: float = 2e-9  # s, recorded only
    dark_count_rate: float = 0.0  # counts / s / detector

    def __post_init__(self):
        if min(self.heralded_rate, self.coincidence_window, self.dark_count_rate) < 0:
            raise ValueError("source rates must be non-negative")
        if self.acquisition_time <= 0:
            raise ValueError("acquisition time must be positive")

    @property
    def expected_photons(self) -> float:
        return self.heralded_rate * self.acquisition_time

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, doc: dict) -> "SourceModel":
        unknown = set(doc) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown source field(s) {sorted(unknown)}")
        return cls(**{k: float(v) for k, v in doc.items()})


@dataclass(frozen=True)
class NoiseModel:
    """Component imperfections.  Angles are radians."""

    waveplate_angle_sigma: float = 0.0
    pbs_extinction: float = 0.0
    phase_drift_sigma: float = 0.0
    detector_efficiency: float | tuple[float, ...] = 1.0

    def __post_init__(self):
        if not 0.0 <= self.pbs_extinction < 0.5:
            raise ValueError("pbs_extinction must lie in [0, 0.5)")
        if self.waveplate_angle_sigma < 0 or self.phase_drift_sigma < 0:
            raise ValueError("noise sigmas must be non-negative")
        eff = np.atleast_1d(np.asarray(self.detector_efficiency, dtype=float))
        if np.any(eff <= 0) or np.any(eff > 1):
            raise ValueError("detector efficiencies must lie in (0, 1]")
        if isinstance(self.detector_efficiency, (list, tuple)):
            object.__setattr__(self, "detector_efficiency", tuple(float(x) for x in eff))

    @classmethod
    def zero(cls) -> "NoiseModel":
        return cls()

    @property
    def is_zero(self) -> bool:
        return (self.waveplate_angle_sigma == 0 and self.pbs_extinction == 0
                and self.phase_drift_sigma == 0 and np.all(np.asarray(self.detector_efficiency) == 1))

    def efficiencies(self, n: int) -> np.ndarray:
        eff = np.atleast_1d(np.asarray(self.detector_efficiency, dtype=float))
        if eff.size == 1:
            return np.full(n, float(eff[0]))
        if eff.size != n:
            raise ValueError(f"{eff.size} detector efficiencies given for {n} detectors")
        return eff

    def to_dict(self) -> dict:
        eff = self.detector_efficiency
        return {
            "waveplate_angle_sigma_deg": math.degrees(self.waveplate_angle_sigma),
            "pbs_extinction": self.pbs_extinction,
            "phase_drift_sigma_deg": math.degrees(self.phase_drift_sigma),
            "detector_efficiency": list(eff) if isinstance(eff, tuple) else eff,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "NoiseModel":
        known = {"waveplate_angle_sigma_deg", "pbs_extinction", "phase_drift_sigma_deg", "detector_efficiency"}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown noise field(s) {sorted(unknown)}")
        eff = doc.get("detector_efficiency", 1.0)
        return cls(
            waveplate_angle_sigma=math.radians(float(doc.get("waveplate_angle_sigma_deg", 0.0))),
            pbs_extinction=float(doc.get("pbs_extinction", 0.0)),
            phase_drift_sigma=math.radians(float(doc.get("phase_drift_sigma_deg", 0.0))),
            detector_efficiency=tuple(eff) if isinstance(eff, list) else float(eff),
        )


# Calibrated so the simulated gates land in the reported 99.0-99.9 % regime.
# These are fitted values, not measured apparatus parameters.
DEFAULT_NOISE = NoiseModel(
    waveplate_angle_sigma=math.radians(0.2),
    pbs_extinction=0.002,
    phase_drift_sigma=math.radians(2.75),
    detector_efficiency=1.0,
)
DEFAULT_SOURCE = SourceModel(dark_count_rate=5.0)
NOISELESS_SOURCE = SourceModel()


@dataclass(frozen=True)
class CountRecord:
    labels: tuple[str, ...]
    counts: tuple[int, ...]
    signal_counts: tuple[int, ...]
    dark_counts: tuple[int, ...]
    photons_drawn: int
    photons_lost: int
    seed: int
    stream: tuple[int, ...]
    source: SourceModel
    noise: NoiseModel
    elapsed: float
    tag: str = ""

    @property
    def total(self) -> int:
        return int(sum(self.counts))

    def to_dict(self) -> dict:
        return {
            "schema_version": circuits.SCHEMA_VERSION,
            "kind": "count_record",
            "tag": self.tag,
            "labels": list(self.labels),
            "counts": list(self.counts),
            "signal_counts": list(self.signal_counts),
            "dark_counts": list(self.dark_counts),
            "photons_drawn": self.photons_drawn,
            "photons_lost": self.photons_lost,
            "seed": self.seed,
            "stream": list(self.stream),
            "elapsed_s": self.elapsed,
            "source": self.source.to_dict(),
            "noise": self.noise.to_dict(),
        }


# ---------------------------------------------------------------------------
# noise realization


def perturb_component(c: Component, noise: NoiseModel, rng: np.random.Generator) -> Component:
    if c.kind in ("HWP", "QWP"):
        return c.with_params(theta=float(np.real(c.params["theta"])) + rng.normal(0.0, noise.waveplate_angle_sigma))
    if c.kind in ("PBS", "BeamDisplacer"):
        return c.with_params(extinction=noise.pbs_extinction) if noise.pbs_extinction else c
    if c.kind == "VBS":
        # the splitter is an HWP at half the splitting angle, so its error doubles
        r, t = complex(c.params["r"]), complex(c.params["t"])
        chi = math.atan2(abs(t), abs(r)) + 2 * rng.normal(0.0, noise.waveplate_angle_sigma)
        pr = r / abs(r) if abs(r) > 0 else 1.0
        pt = t / abs(t) if abs(t) > 0 else 1.0
        return c.with_params(r=math.cos(chi) * pr, t=math.sin(chi) * pt)
    if c.kind == "PhaseShifter":
        return c.with_params(theta=float(np.real(c.params["theta"])) + rng.normal(0.0, noise.phase_drift_sigma))
    return c


def perturb_netlist(net: Netlist, noise: NoiseModel, rng: np.random.Generator) -> Netlist:
    """One quasi-static draw of every component parameter, in netlist order."""
    stages = tuple(tuple(perturb_component(c, noise, rng) for c in stage) for stage in net.stages)
    return Netlist(net.basis, stages, net.name, net.provenance)


# ---------------------------------------------------------------------------
# counting


def _detect(rng, probs: np.ndarray, photons: int, dark_mean: float):
    """Multinomial split of ``photons`` over detectors plus a 'lost' bin, then dark counts."""
    p = np.clip(probs, 0.0, None)
    lost = max(0.0, 1.0 - p.sum())
    pvals = np.append(p, lost)
    pvals = pvals / pvals.sum()
    draw = rng.multinomial(photons, pvals)
    dark = rng.poisson(dark_mean, size=len(p)) if dark_mean > 0 else np.zeros(len(p), dtype=np.int64)
    return draw[:-1], dark, int(draw[-1])


def sample_counts(circuit: Netlist, state: StateVector, source: SourceModel = NOISELESS_SOURCE,
                  noise: NoiseModel = NoiseModel(), seed: int = 0, *, stream_key: Sequence[int] = (),
                  resolve_polarization: bool = False, tag: str = "") -> CountRecord:
    """Counts per output detector for one acquisition.

    Draws a noise realization, propagates ``state`` through the perturbed
    circuit, draws N ~ Poisson(rate * time) photons and distributes them
    multinomially (detector efficiency losses go to an unrecorded bin), then
    adds Poisson dark counts per detector.
    """
    if state.basis.labels != circuit.basis.labels:
        raise ValueError("input state and circuit use different bases")
    rng = stream(seed, *stream_key)
    u = circuits.compile_netlist(perturb_netlist(circuit, noise, rng))
    out = u @ state
    groups = gates.detector_groups(circuit.basis, resolve_polarization)
    probs = gates.output_distribution(out.amplitudes, groups) * noise.efficiencies(len(groups))
    photons = int(rng.poisson(source.expected_photons))
    signal, dark, lost = _detect(rng, probs, photons, source.dark_count_rate * source.acquisition_time)
    return CountRecord(
        labels=tuple(g[0] for g in groups),
        counts=tuple(int(x) for x in signal + dark),
        signal_counts=tuple(int(x) for x in signal),
        dark_counts=tuple(int(x) for x in dark),
        photons_drawn=photons,
        photons_lost=lost,
        seed=int(seed),
        stream=tuple(int(k) for k in stream_key),
        source=source,
        noise=noise,
        elapsed=source.acquisition_time,
        tag=tag,
    )


def uses_polarization(gate: str) -> bool:
    return gates.PRESETS[gate][0] == "CX_hybrid"


def experiment_inputs(net: Netlist, gate: str) -> tuple[str, ...]:
    """Computational-basis inputs: the encoded H modes, or all eight for CX."""
    return net.basis.labels if uses_polarization(gate) else net.basis.encoding


def _map(fn, items, workers):
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def truth_table_records(gate: str, source: SourceModel, noise: NoiseModel, seed: int,
                        workers: int | None = None) -> list[CountRecord]:
    net = circuits.paper_circuit(gate)
    inputs = experiment_inputs(net, gate)
    pol = uses_polarization(gate)
    code = gate_code(gate)

    def one(i):
        state = StateVector.basis_state(net.basis, inputs[i])
        return sample_counts(net, state, source, noise, seed, stream_key=(code, TRUTH_TABLE, i),
                             resolve_polarization=pol, tag=f"{gate}:truth:{inputs[i]}")

    return _map(one, range(len(inputs)), workers)


def run_truth_table_experiment(gate: str, source: SourceModel = DEFAULT_SOURCE,
                               noise: NoiseModel = DEFAULT_NOISE, seed: int = 0,
                               workers: int | None = None) -> gates.TruthTable:
    """Sampled truth table; rows normalized to P(i, j) = n_ij / sum_k n_ik."""
    net = circuits.paper_circuit(gate)
    records = truth_table_records(gate, source, noise, seed, workers)
    exact = gates.truth_table(circuits.compile_netlist(net), experiment_inputs(net, gate),
                              resolve_polarization=uses_polarization(gate),
                              ideal=gates.ideal_gate(gate))
    return gates.TruthTable.from_counts(exact.input_labels, exact.output_labels,
                                        [r.counts for r in records], exact.targets)


def exact_truth_table(gate: str) -> gates.TruthTable:
    net = circuits.paper_circuit(gate)
    return gates.truth_table(circuits.compile_netlist(net), experiment_inputs(net, gate),
                             resolve_polarization=uses_polarization(gate),
                             ideal=gates.ideal_gate(gate))


# ---------------------------------------------------------------------------
# tomography


@dataclass(frozen=True)
class TomographyRun:
    gate: str
    result: tomography.ReconstructionResult
    ideal_output: StateVector
    fidelity: float
    measurements: tuple[tomography.InterferenceMeasurement, ...]
    records: tuple[CountRecord, ...] = field(default=(), repr=False)


def tomography_setup(gate: str):
    """Circuit, equal-superposition input, reconstruction labels, phase chain, ideal output."""
    net = circuits.paper_circuit(gate)
    if uses_polarization(gate):
        labels = net.basis.labels
        chain = tomography.hybrid_chain(net.modes)
        amps = np.full(len(labels), 1 / math.sqrt(len(labels)), dtype=complex)
        state = StateVector.normalized(net.basis, amps)
        ideal = StateVector(ModeBasis.spatial(labels), gates.ideal_gate(gate).matrix @ amps)
    else:
        labels = net.modes
        chain = tomography.SPATIAL_CHAIN
        levels = np.full(len(labels), 1 / math.sqrt(len(labels)), dtype=complex)
        state = StateVector.from_levels(net.basis, levels)
        ideal = StateVector(ModeBasis.spatial(labels), gates.ideal_gate(gate).matrix @ levels)
    return net, state, tuple(labels), tuple(chain), ideal


def _interference_counts(rng, out: StateVector, pair, offset, source, noise, eff_pair):
    drift = rng.normal(0.0, noise.phase_drift_sigma)
    i1 = tomography.mode_indices(out.basis, pair[0])
    i2 = tomography.mode_indices(out.basis, pair[1])
    a1, a2 = out.amplitudes[i1], out.amplitudes[i2]
    weight = float(np.sum(np.abs(a1) ** 2 + np.abs(a2) ** 2))
    p = tomography.interference_probability(a1, a2, offset + drift) if weight > 0 else 0.5
    probs = np.array([weight * p, weight * (1 - p)]) * eff_pair
    photons = int(rng.poisson(source.expected_photons))
    signal, dark, lost = _detect(rng, probs, photons, source.dark_count_rate * source.acquisition_time)
    return signal, dark, photons, lost


def run_tomography_experiment(gate: str, source: SourceModel = DEFAULT_SOURCE,
                              noise: NoiseModel = DEFAULT_NOISE, seed: int = 0,
                              workers: int | None = None) -> TomographyRun:
    """Populations plus two-offset interference on each chain pair, then reconstruction.

    Acquisition 0 measures populations; acquisitions 1.. are (pair, offset)
    interference runs.  Each draws its own circuit noise realization.
    """
    net, state, labels, chain, ideal = tomography_setup(gate)
    pol = uses_polarization(gate)
    code = gate_code(gate)
    groups = gates.detector_groups(net.basis, pol)
    group_labels = [g[0] for g in groups]
    eff = noise.efficiencies(len(groups))
    jobs = [None] + [(pair, off) for pair in chain for off in tomography.OFFSETS]

    def acquire(k):
        rng = stream(seed, code, TOMOGRAPHY, k)
        u = circuits.compile_netlist(perturb_netlist(net, noise, rng))
        out = u @ state
        if jobs[k] is None:
            probs = gates.output_distribution(out.amplitudes, groups) * eff
            photons = int(rng.poisson(source.expected_photons))
            signal, dark, lost = _detect(rng, probs, photons, source.dark_count_rate * source.acquisition_time)
            rec_labels, tag = tuple(group_labels), f"{gate}:populations"
        else:
            pair, off = jobs[k]
            eff_pair = np.array([eff[group_labels.index(pair[0])], eff[group_labels.index(pair[1])]])
            signal, dark, photons, lost = _interference_counts(rng, out, pair, off, source, noise, eff_pair)
            rec_labels = (f"{pair[0]}+{pair[1]}", f"{pair[0]}-{pair[1]}")
            tag = f"{gate}:interference:{pair[0]}{pair[1]}:{round(math.degrees(off))}"
        return CountRecord(rec_labels, tuple(int(x) for x in signal + dark), tuple(int(x) for x in signal),
                           tuple(int(x) for x in dark), photons, lost, int(seed), (code, TOMOGRAPHY, k),
                           source, noise, source.acquisition_time, tag)

    records = _map(acquire, range(len(jobs)), workers)
    pop_counts = np.array(records[0].counts, dtype=float)
    if pop_counts.sum() <= 0:
        raise ValueError("population acquisition recorded no counts")
    pops = dict(zip(labels, pop_counts / pop_counts.sum()))

    measurements, phases = [], []
    for pi, pair in enumerate(chain):
        ps = []
        for oi, off in enumerate(tomography.OFFSETS):
            c = records[1 + 2 * pi + oi].counts
            p = c[0] / (c[0] + c[1]) if c[0] + c[1] > 0 else 0.5
            measurements.append(tomography.InterferenceMeasurement(pair, p, off))
            ps.append(p)
        phases.append((*pair, tomography.extract_phase(*ps)))
    result = tomography.reconstruct(pops, phases, labels)
    fid = uhlmann_fidelity(result.density, DensityMatrix.from_state(ideal))
    return TomographyRun(gate, result, ideal, fid, tuple(measurements), tuple(records))


def run_fidelity_experiment(gate: str, source: SourceModel = DEFAULT_SOURCE,
                            noise: NoiseModel = DEFAULT_NOISE, seed: int = 0) -> float:
    return run_tomography_experiment(gate, source, noise, seed).fidelity


def noiseless_tomography(gate: str) -> TomographyRun:
    """Exact probabilities, no sampling."""
    net, state, labels, chain, ideal = tomography_setup(gate)
    out = circuits.compile_netlist(net) @ state
    result = tomography.noiseless_reconstruction(out, labels, chain)
    measurements = tuple(tomography.InterferenceMeasurement(pair, tomography.simulate_interference(out, pair, off), off)
                         for pair in chain for off in tomography.OFFSETS)
    fid = uhlmann_fidelity(result.density, DensityMatrix.from_state(ideal))
    return TomographyRun(gate, result, ideal, fid, measurements)


def with_rate(source: SourceModel, heralded_rate: float) -> SourceModel:
    return replace(source, heralded_rate=heralded_rate)
